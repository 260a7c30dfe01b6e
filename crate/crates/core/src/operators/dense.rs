use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{check_len, LinearOperator};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Explicit `rows x cols` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> DenseOperator<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        check_len(rows * cols, data.len())?;
        if let Some(pos) = data.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::NonFinite { index: pos });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex<T>) -> Result<Self> {
        let data = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        Self::new(rows, cols, data)
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, T::one())
    }

    pub fn scaled_identity(n: usize, s: T) -> Self {
        let mut data = vec![Complex::new(T::zero(), T::zero()); n * n];
        for i in 0..n {
            data[i * n + i] = Complex::new(s, T::zero());
        }
        Self { rows: n, cols: n, data }
    }

    /// Complex Gaussian entries with variance `1 / rows`, so that
    /// `E |A x|^2 = |x|^2`.
    pub fn gaussian(rows: usize, cols: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = (2.0 * rows as f64).sqrt().recip();
        let data = (0..rows * cols)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex::new(T::lit(re * scale), T::lit(im * scale))
            })
            .collect();
        Self { rows, cols, data }
    }

    pub fn entry(&self, r: usize, c: usize) -> Complex<T> {
        self.data[r * self.cols + c]
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }
}

impl<T: Real> LinearOperator<T> for DenseOperator<T> {
    fn input_dim(&self) -> usize {
        self.cols
    }

    fn output_dim(&self) -> usize {
        self.rows
    }

    fn apply(&self, x: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        check_len(self.cols, x.len())?;
        Ok(self
            .data
            .chunks_exact(self.cols)
            .map(|row| {
                row.iter()
                    .zip(x)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a * b)
            })
            .collect())
    }

    fn adjoint(&self, y: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        check_len(self.rows, y.len())?;
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.cols];
        for (row, yr) in self.data.chunks_exact(self.cols).zip(y) {
            for (o, a) in out.iter_mut().zip(row) {
                *o = *o + a.conj() * yr;
            }
        }
        Ok(out)
    }
}
