//! Explicit cover tree over a finite set of complex vectors.
//!
//! Scales grow downward from the root (scale 0). A node at scale `l` covers
//! its children at scales `> l`: a child that first appears at scale `s`
//! lies within `sigma * 2^-(s-1)` of its parent, and the nodes present at
//! any scale `l` are pairwise farther apart than `sigma * 2^-l`. Self-chains
//! are collapsed: a node is stored once, at the coarsest scale where it
//! appears.
//!
//! Search follows the branch-and-bound descent with a warm-start estimate,
//! either to a multiplicative `(1 + eps)` guarantee or to an additive
//! squared-distance guarantee. Every Euclidean distance computed during
//! build or query is counted.

mod build;
mod io;
mod search;
mod validate;

pub use io::{read_tree, write_tree};
pub use search::{aspect_ratio, query_cost_profile, CostProfile, Evaluation, SearchTrace};
pub use validate::{PropertyCheck, ValidationReport};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{self, Real};

/// A nonempty collection of points sharing one dimension. Point ids are
/// their positions `0..len`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> PointSet<T> {
    /// Builds a point set from row-major storage of `data.len() / dim` points.
    pub fn new(dim: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if dim == 0 || data.is_empty() {
            return Err(Error::EmptyPointSet);
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: data.len() % dim,
            });
        }
        if let Some(pos) = data.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite { index: pos / dim });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[Complex<T>]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).ok_or(Error::EmptyPointSet)?;
        let mut data = Vec::with_capacity(dim * rows.len());
        for row in rows {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(dim, data)
    }

    /// Real-valued points, embedded with zero imaginary parts.
    pub fn from_real_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let complex: Vec<Vec<Complex<T>>> = rows
            .iter()
            .map(|r| r.as_ref().iter().map(|&x| Complex::new(x, T::zero())).collect())
            .collect();
        Self::from_rows(&complex)
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, id: usize) -> &[Complex<T>] {
        &self.data[id * self.dim..(id + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Complex<T>]> {
        self.data.chunks_exact(self.dim)
    }

    pub(crate) fn check_query(&self, query: &[Complex<T>]) -> Result<()> {
        if query.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: query.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_id(&self, id: usize) -> Result<()> {
        if id >= self.len() {
            return Err(Error::InvalidId { id, len: self.len() });
        }
        Ok(())
    }
}

/// One explicit node. `scale` is the coarsest scale at which the point
/// appears; children are ordered by `(scale, point_id)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Node<T> {
    pub point_id: usize,
    pub scale: i32,
    /// Arena indices of children.
    pub children: Vec<usize>,
    /// Largest distance from this point to any descendant.
    pub maxdist: T,
    /// Ids of points coinciding exactly with `point_id`.
    pub duplicate_ids: Vec<usize>,
    /// `reach_suffix[k]` is the largest distance from this point to any point
    /// in the subtrees of `children[k..]`.
    reach_suffix: Vec<T>,
}

impl<T: Real> Node<T> {
    fn new(point_id: usize, scale: i32) -> Self {
        Self {
            point_id,
            scale,
            children: Vec::new(),
            maxdist: T::zero(),
            duplicate_ids: Vec::new(),
            reach_suffix: Vec::new(),
        }
    }
}

/// Result of a nearest-neighbour query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchResult<T> {
    pub point_id: usize,
    pub distance: T,
    pub distances_evaluated: u64,
}

/// Stopping rule for the tree descent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance<T> {
    /// Returned distance is at most `(1 + eps)` times the optimum.
    Multiplicative(T),
    /// Returned squared distance exceeds the optimum by at most this amount.
    Additive(T),
}

impl<T: Real> Tolerance<T> {
    pub fn exact() -> Self {
        Tolerance::Multiplicative(T::zero())
    }

    pub fn value(&self) -> T {
        match *self {
            Tolerance::Multiplicative(v) | Tolerance::Additive(v) => v,
        }
    }

    pub(crate) fn check(&self) -> Result<()> {
        let v = self.value();
        if !(v.is_finite() && v >= T::zero()) {
            return Err(Error::InvalidTolerance { value: v.as_f64() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoverTree<T> {
    points: PointSet<T>,
    /// Arena; index 0 is the root.
    nodes: Vec<Node<T>>,
    sigma: T,
    max_scale: i32,
    build_distances: u64,
}

impl<T: Real> CoverTree<T> {
    pub fn points(&self) -> &PointSet<T> {
        &self.points
    }

    pub fn nodes(&self) -> &[Node<T>] {
        &self.nodes
    }

    pub fn root(&self) -> &Node<T> {
        &self.nodes[0]
    }

    /// Largest distance from the root point to any point.
    pub fn sigma(&self) -> T {
        self.sigma
    }

    /// Finest scale holding an explicit node (`L_max`).
    pub fn max_scale(&self) -> i32 {
        self.max_scale
    }

    /// Distances computed while building (or loading) the tree.
    pub fn build_distances(&self) -> u64 {
        self.build_distances
    }

    /// Covering radius `sigma * 2^-scale`.
    pub fn radius(&self, scale: i32) -> T {
        self.sigma * T::lit(2.0).powi(-scale)
    }

    /// Largest distance from `node` to a descendant appearing below `scale`.
    pub(crate) fn maxdist_below(&self, node: usize, scale: i32) -> T {
        let n = &self.nodes[node];
        let first = n.children.partition_point(|&c| self.nodes[c].scale <= scale);
        n.reach_suffix.get(first).copied().unwrap_or_else(T::zero)
    }

    /// Arena indices of the children of `node` that first appear at `scale`.
    pub(crate) fn children_at(&self, node: usize, scale: i32) -> &[usize] {
        let children = &self.nodes[node].children;
        let lo = children.partition_point(|&c| self.nodes[c].scale < scale);
        let hi = children.partition_point(|&c| self.nodes[c].scale <= scale);
        &children[lo..hi]
    }

    /// Recomputes per-child reach and `maxdist` for every node; returns the
    /// number of distances evaluated.
    fn compute_reach(&mut self) -> u64 {
        let mut count = 0u64;
        let mut stack = Vec::new();
        for q in 0..self.nodes.len() {
            let origin = self.points.point(self.nodes[q].point_id);
            let mut reach = Vec::with_capacity(self.nodes[q].children.len());
            for &c in &self.nodes[q].children {
                let mut best = T::zero();
                stack.clear();
                stack.push(c);
                while let Some(s) = stack.pop() {
                    let d = scalar::dist(origin, self.points.point(self.nodes[s].point_id));
                    count += 1;
                    if d > best {
                        best = d;
                    }
                    stack.extend_from_slice(&self.nodes[s].children);
                }
                reach.push(best);
            }
            for k in (0..reach.len().saturating_sub(1)).rev() {
                if reach[k + 1] > reach[k] {
                    reach[k] = reach[k + 1];
                }
            }
            let node = &mut self.nodes[q];
            node.maxdist = reach.first().copied().unwrap_or_else(T::zero);
            node.reach_suffix = reach;
        }
        count
    }
}

/// Exhaustive nearest neighbour; ties go to the smallest id.
pub fn nn_exact_brute<T: Real>(points: &PointSet<T>, query: &[Complex<T>]) -> Result<SearchResult<T>> {
    points.check_query(query)?;
    let mut best = SearchResult {
        point_id: 0,
        distance: T::infinity(),
        distances_evaluated: 0,
    };
    for (id, p) in points.iter().enumerate() {
        let d = scalar::dist(query, p);
        best.distances_evaluated += 1;
        if d < best.distance {
            best.point_id = id;
            best.distance = d;
        }
    }
    Ok(best)
}
