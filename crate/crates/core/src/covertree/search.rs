use num_complex::Complex;

use super::{CoverTree, PointSet, SearchResult, Tolerance};
use crate::error::{Error, Result};
use crate::scalar::{self, Real};

/// Why a distance was evaluated during a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    WarmStart {
        point_id: usize,
    },
    Root {
        point_id: usize,
    },
    /// A child that is not the self-child of its parent.
    Child {
        point_id: usize,
        scale: i32,
    },
}

/// Per-query record of every distance computed, in order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchTrace {
    pub evaluations: Vec<Evaluation>,
    /// Scale at which the descent stopped.
    pub final_scale: i32,
}

struct Best<T> {
    id: usize,
    dist: T,
}

impl<T: Real> Best<T> {
    fn offer(&mut self, id: usize, dist: T) {
        if dist < self.dist || (dist == self.dist && id < self.id) {
            self.id = id;
            self.dist = dist;
        }
    }
}

impl<T: Real> CoverTree<T> {
    /// `(1 + eps)`-approximate nearest neighbour, warm-started at
    /// `estimate_id`. With `eps = 0` the result is an exact nearest
    /// neighbour (smallest id among ties).
    pub fn ann_search(&self, query: &[Complex<T>], estimate_id: usize, eps: T) -> Result<SearchResult<T>> {
        self.search(query, estimate_id, Tolerance::Multiplicative(eps))
    }

    /// Nearest neighbour whose squared distance exceeds the optimum by at
    /// most `eps_add`.
    pub fn ann_search_additive(&self, query: &[Complex<T>], estimate_id: usize, eps_add: T) -> Result<SearchResult<T>> {
        self.search(query, estimate_id, Tolerance::Additive(eps_add))
    }

    pub fn search(&self, query: &[Complex<T>], estimate_id: usize, tol: Tolerance<T>) -> Result<SearchResult<T>> {
        self.descend(query, estimate_id, tol, None)
    }

    /// Same as [`search`](Self::search), also recording every distance
    /// evaluation.
    pub fn search_traced(
        &self,
        query: &[Complex<T>],
        estimate_id: usize,
        tol: Tolerance<T>,
    ) -> Result<(SearchResult<T>, SearchTrace)> {
        let mut trace = SearchTrace::default();
        let result = self.descend(query, estimate_id, tol, Some(&mut trace))?;
        Ok((result, trace))
    }

    fn descend(
        &self,
        query: &[Complex<T>],
        estimate_id: usize,
        tol: Tolerance<T>,
        mut trace: Option<&mut SearchTrace>,
    ) -> Result<SearchResult<T>> {
        self.points.check_query(query)?;
        self.points.check_id(estimate_id)?;
        tol.check()?;

        let mut count = 0u64;
        let mut record = |e: Evaluation| {
            if let Some(t) = trace.as_deref_mut() {
                t.evaluations.push(e);
            }
        };

        let d_start = scalar::dist(query, self.points.point(estimate_id));
        count += 1;
        record(Evaluation::WarmStart { point_id: estimate_id });
        let mut best = Best {
            id: estimate_id,
            dist: d_start,
        };

        let root_id = self.nodes[0].point_id;
        let d_root = if root_id == estimate_id {
            d_start
        } else {
            count += 1;
            record(Evaluation::Root { point_id: root_id });
            scalar::dist(query, self.points.point(root_id))
        };
        best.offer(root_id, d_root);

        let two = T::lit(2.0);
        let mut candidates: Vec<(usize, T)> = vec![(0, d_root)];
        let mut scale = 0i32;
        while scale < self.max_scale && !candidates.is_empty() {
            let keep_going = match tol {
                Tolerance::Multiplicative(eps) => {
                    eps == T::zero() || self.sigma * two.powi(1 - scale) * (T::one() + eps.recip()) > best.dist
                }
                Tolerance::Additive(eps_add) => {
                    let lower = candidates
                        .iter()
                        .map(|&(q, d)| (d - self.maxdist_below(q, scale)).max(T::zero()))
                        .fold(T::infinity(), T::min);
                    lower < best.dist && best.dist * best.dist - lower * lower > eps_add
                }
            };
            if !keep_going {
                break;
            }

            let next_scale = scale + 1;
            let mut expanded = Vec::with_capacity(candidates.len() * 2);
            for &(q, d_q) in &candidates {
                // the self-child inherits its parent's distance
                expanded.push((q, d_q));
                for &c in self.children_at(q, next_scale) {
                    let pid = self.nodes[c].point_id;
                    let d = scalar::dist(query, self.points.point(pid));
                    count += 1;
                    record(Evaluation::Child {
                        point_id: pid,
                        scale: next_scale,
                    });
                    expanded.push((c, d));
                }
            }
            for &(c, d) in &expanded {
                best.offer(self.nodes[c].point_id, d);
            }
            let d_min = best.dist;
            expanded.retain(|&(c, d)| {
                let reach = self.maxdist_below(c, next_scale);
                // nodes with nothing below have already been offered
                reach > T::zero() && d <= d_min + reach
            });
            candidates = expanded;
            scale = next_scale;
        }

        if let Some(t) = trace {
            t.final_scale = scale;
        }
        Ok(SearchResult {
            point_id: best.id,
            distance: best.dist,
            distances_evaluated: count,
        })
    }
}

/// Summary of per-query distance counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CostProfile {
    pub counts: Vec<u64>,
    pub median: f64,
    pub mean: f64,
    pub max: u64,
}

/// Runs every query warm-started at the root and summarizes the distance
/// counts.
pub fn query_cost_profile<T: Real, Q: AsRef<[Complex<T>]>>(
    tree: &CoverTree<T>,
    queries: &[Q],
    eps: T,
) -> Result<CostProfile> {
    if queries.is_empty() {
        return Err(Error::Config("query list is empty".into()));
    }
    let root = tree.root().point_id;
    let counts = queries
        .iter()
        .map(|q| tree.ann_search(q.as_ref(), root, eps).map(|r| r.distances_evaluated))
        .collect::<Result<Vec<_>>>()?;
    let mut sorted = counts.clone();
    sorted.sort_unstable();
    let mid = sorted.len() / 2;
    let median = if sorted.len() % 2 == 1 {
        sorted[mid] as f64
    } else {
        (sorted[mid - 1] + sorted[mid]) as f64 / 2.0
    };
    let mean = counts.iter().sum::<u64>() as f64 / counts.len() as f64;
    Ok(CostProfile {
        max: *sorted.last().expect("nonempty"),
        counts,
        median,
        mean,
    })
}

/// Ratio of the largest to the smallest nonzero pairwise distance. Quadratic
/// in the number of points, so refused above 5000 points. `None` when every
/// pair coincides.
pub fn aspect_ratio<T: Real>(points: &PointSet<T>) -> Result<Option<f64>> {
    const LIMIT: usize = 5000;
    if points.len() > LIMIT {
        return Err(Error::Config(format!(
            "aspect ratio limited to {LIMIT} points, got {}",
            points.len()
        )));
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = scalar::dist(points.point(i), points.point(j)).as_f64();
            if d > 0.0 {
                lo = lo.min(d);
                hi = hi.max(d);
            }
        }
    }
    Ok(lo.is_finite().then(|| hi / lo))
}
