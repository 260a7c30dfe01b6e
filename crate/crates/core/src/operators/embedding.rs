//! Empirical embedding constants and operator norm.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::LinearOperator;
use crate::error::{Error, Result};
use crate::scalar::{self, Real};

/// Extremes of `|A(x - x')|^2 / |x - x'|^2` over the evaluated pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingEstimate<T> {
    pub alpha: T,
    pub beta: T,
    pub alpha_pair: (usize, usize),
    pub beta_pair: (usize, usize),
    pub pairs_evaluated: usize,
    pub exhaustive: bool,
}

/// Estimates the lower and upper embedding constants of `op` on the
/// difference set of `points`.
///
/// All pairs are used when there are at most `pair_budget` of them, otherwise
/// `pair_budget` distinct-index pairs are drawn with `seed`. Images are
/// computed once per point; pair differences use linearity.
pub fn estimate_bilipschitz<T: Real, A: LinearOperator<T> + ?Sized>(
    op: &A,
    points: &[Vec<Complex<T>>],
    pair_budget: usize,
    seed: u64,
) -> Result<EmbeddingEstimate<T>> {
    let n = points.len();
    let total = n.saturating_mul(n.saturating_sub(1)) / 2;
    let images = points.iter().map(|p| op.apply(p)).collect::<Result<Vec<_>>>()?;

    let mut est: Option<EmbeddingEstimate<T>> = None;
    let mut visit = |i: usize, j: usize| {
        let den = scalar::dist_sqr(&points[i], &points[j]);
        if den <= T::zero() {
            return;
        }
        let ratio = scalar::dist_sqr(&images[i], &images[j]) / den;
        match est.as_mut() {
            None => {
                est = Some(EmbeddingEstimate {
                    alpha: ratio,
                    beta: ratio,
                    alpha_pair: (i, j),
                    beta_pair: (i, j),
                    pairs_evaluated: 1,
                    exhaustive: false,
                })
            }
            Some(e) => {
                e.pairs_evaluated += 1;
                if ratio < e.alpha {
                    e.alpha = ratio;
                    e.alpha_pair = (i, j);
                }
                if ratio > e.beta {
                    e.beta = ratio;
                    e.beta_pair = (i, j);
                }
            }
        }
    };

    let exhaustive = total <= pair_budget;
    if exhaustive {
        for i in 0..n {
            for j in i + 1..n {
                visit(i, j);
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..pair_budget {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            visit(i.min(j), i.max(j));
        }
    }
    let mut est = est.ok_or(Error::DegeneratePairs)?;
    est.exhaustive = exhaustive;
    Ok(est)
}

/// Largest singular value of `op` by power iteration on `A^H A`.
pub fn operator_norm<T: Real, A: LinearOperator<T> + ?Sized>(op: &A, iterations: usize, seed: u64) -> Result<T> {
    let trace = operator_norm_trace(op, iterations, seed)?;
    Ok(trace.into_iter().fold(T::zero(), T::max))
}

/// Per-iteration estimates `|A v_k|` with unit `v_k`. The sequence is
/// nondecreasing up to rounding.
pub fn operator_norm_trace<T: Real, A: LinearOperator<T> + ?Sized>(
    op: &A,
    iterations: usize,
    seed: u64,
) -> Result<Vec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<Complex<T>> = (0..op.input_dim())
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(T::lit(re), T::lit(im))
        })
        .collect();
    let mut trace = Vec::with_capacity(iterations);
    for _ in 0..iterations.max(1) {
        let nv = scalar::norm(&v);
        if nv <= T::zero() {
            trace.push(T::zero());
            break;
        }
        for c in v.iter_mut() {
            *c = *c / nv;
        }
        let w = op.apply(&v)?;
        trace.push(scalar::norm(&w));
        v = op.adjoint(&w)?;
    }
    Ok(trace)
}

/// Returns `y + w` with complex Gaussian direction and `|w| = noise_norm`.
pub fn add_noise<T: Real>(y: &[Complex<T>], noise_norm: T, seed: u64) -> Vec<Complex<T>> {
    if noise_norm <= T::zero() || y.is_empty() {
        return y.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w: Vec<Complex<T>> = (0..y.len())
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex::new(T::lit(re), T::lit(im))
        })
        .collect();
    let s = noise_norm / scalar::norm(&w);
    y.iter().zip(&w).map(|(a, b)| *a + *b * s).collect()
}
