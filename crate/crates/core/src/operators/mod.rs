//! Linear forward models with an apply/adjoint contract.

mod dense;
mod embedding;
mod epi;

pub use dense::DenseOperator;
pub use embedding::{add_noise, estimate_bilipschitz, operator_norm, operator_norm_trace, EmbeddingEstimate};
pub use epi::{read_pattern, write_pattern, EpiOperator, EpiPattern, ShiftRule};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A linear map `A: C^n -> C^m` with its conjugate transpose.
///
/// Implementations are immutable after construction and safe to share
/// across threads.
pub trait LinearOperator<T: Real>: Send + Sync {
    /// `n`
    fn input_dim(&self) -> usize;
    /// `m`
    fn output_dim(&self) -> usize;
    fn apply(&self, x: &[Complex<T>]) -> Result<Vec<Complex<T>>>;
    fn adjoint(&self, y: &[Complex<T>]) -> Result<Vec<Complex<T>>>;
}

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
