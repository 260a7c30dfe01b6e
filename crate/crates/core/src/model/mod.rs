//! Discrete signal model: a dictionary of atoms, per-pixel cone projection
//! and the product-space projection over all pixels of a multichannel image.

mod io;
mod projection;

pub use io::{read_dictionary, write_dictionary};
pub use projection::{
    cone_project_approx, cone_project_exact, product_project, ConeProjection, ProductProjection, ProjectionMode,
};

use num_complex::Complex;

use crate::covertree::{CoverTree, PointSet};
use crate::error::{Error, Result};
use crate::scalar::{self, Real};

/// Physical parameters an atom was simulated from. Non-MRF dictionaries use
/// zeros.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TissueParams {
    pub t1_ms: f64,
    pub t2_ms: f64,
}

impl TissueParams {
    pub fn new(t1_ms: f64, t2_ms: f64) -> Self {
        Self { t1_ms, t2_ms }
    }
}

/// `d` atoms of dimension `n̄` with their norms, unit-norm copies and
/// parameter lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary<T> {
    atoms: PointSet<T>,
    norms: Vec<T>,
    normalized: PointSet<T>,
    params: Vec<TissueParams>,
}

impl<T: Real> Dictionary<T> {
    pub fn new(atoms: PointSet<T>, params: Vec<TissueParams>) -> Result<Self> {
        if params.len() != atoms.len() {
            return Err(Error::DimensionMismatch {
                expected: atoms.len(),
                found: params.len(),
            });
        }
        let mut norms = Vec::with_capacity(atoms.len());
        let mut unit = Vec::with_capacity(atoms.len() * atoms.dim());
        for (i, a) in atoms.iter().enumerate() {
            let n = scalar::norm(a);
            if !(n > T::zero()) {
                return Err(Error::Config(format!("atom {i} has zero norm")));
            }
            norms.push(n);
            unit.extend(a.iter().map(|c| c / n));
        }
        let normalized = PointSet::new(atoms.dim(), unit)?;
        Ok(Self {
            atoms,
            norms,
            normalized,
            params,
        })
    }

    pub fn unlabeled(atoms: PointSet<T>) -> Result<Self> {
        let params = vec![TissueParams::default(); atoms.len()];
        Self::new(atoms, params)
    }

    /// Number of atoms `d`.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Atom dimension `n̄`.
    pub fn dim(&self) -> usize {
        self.atoms.dim()
    }

    pub fn atom(&self, id: usize) -> &[Complex<T>] {
        self.atoms.point(id)
    }

    pub fn atoms(&self) -> &PointSet<T> {
        &self.atoms
    }

    pub fn norm(&self, id: usize) -> T {
        self.norms[id]
    }

    pub fn normalized_atom(&self, id: usize) -> &[Complex<T>] {
        self.normalized.point(id)
    }

    pub fn normalized(&self) -> &PointSet<T> {
        &self.normalized
    }

    pub fn params(&self) -> &[TissueParams] {
        &self.params
    }

    /// Cover tree over the unit-norm atoms.
    pub fn build_tree(&self) -> Result<CoverTree<T>> {
        CoverTree::build(self.normalized.clone())
    }

    /// Index of the atom simulated from `(t1, t2)`, matched to a relative
    /// tolerance of `1e-9`.
    pub fn find_params(&self, t1_ms: f64, t2_ms: f64) -> Option<usize> {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs());
        self.params
            .iter()
            .position(|p| close(p.t1_ms, t1_ms) && close(p.t2_ms, t2_ms))
    }
}

/// Multichannel image `X` with `slices` channels (rows) and `pixels` spatial
/// pixels (columns), stored slice-major: entry `(l, j)` lives at
/// `l * pixels + j`. This is also the vectorization every operator expects.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductImage<T> {
    slices: usize,
    pixels: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> ProductImage<T> {
    pub fn zeros(slices: usize, pixels: usize) -> Self {
        Self {
            slices,
            pixels,
            data: scalar::zeros(slices * pixels),
        }
    }

    pub fn from_vec(slices: usize, pixels: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != slices * pixels {
            return Err(Error::DimensionMismatch {
                expected: slices * pixels,
                found: data.len(),
            });
        }
        Ok(Self { slices, pixels, data })
    }

    pub fn slices(&self) -> usize {
        self.slices
    }

    pub fn pixels(&self) -> usize {
        self.pixels
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.data
    }

    /// Pixel `j` as an `n̄`-vector.
    pub fn column(&self, j: usize) -> Vec<Complex<T>> {
        (0..self.slices).map(|l| self.data[l * self.pixels + j]).collect()
    }

    pub fn set_column(&mut self, j: usize, values: &[Complex<T>]) {
        debug_assert_eq!(values.len(), self.slices);
        for (l, v) in values.iter().enumerate() {
            self.data[l * self.pixels + j] = *v;
        }
    }

    /// Synthesizes `X_j = gamma_j * psi_{id_j}` from atom ids and intensities.
    pub fn from_atoms(dict: &Dictionary<T>, ids: &[usize], gammas: &[T]) -> Result<Self> {
        if ids.len() != gammas.len() {
            return Err(Error::DimensionMismatch {
                expected: ids.len(),
                found: gammas.len(),
            });
        }
        let mut image = Self::zeros(dict.dim(), ids.len());
        for (j, (&id, &g)) in ids.iter().zip(gammas).enumerate() {
            dict.atoms.check_id(id)?;
            let col: Vec<_> = dict.atom(id).iter().map(|c| c * g).collect();
            image.set_column(j, &col);
        }
        Ok(image)
    }
}
