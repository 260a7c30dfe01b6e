//! Convergence constants and per-iteration checks against recorded runs.

use super::IterationRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundTheorem {
    /// `(1 + epsilon)`-approximate projections with slack `delta`.
    /// Non-squared error bound.
    InexactMultiplicative { epsilon: f64, delta: f64 },
    /// Additive `eps_t`-close projections. Squared error bound.
    AdditiveClose,
    /// `eps_t = gamma |A^H (A x^t - y)|^2`. Squared error bound.
    GradientFeedback { gamma: f64 },
}

/// Embedding constants and step size shared by every theorem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInputs {
    pub alpha: f64,
    pub beta: f64,
    pub step_size: f64,
    /// Spectral norm `|||A|||`.
    pub op_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceBound {
    pub theorem: BoundTheorem,
    pub inputs: BoundInputs,
    pub rho: f64,
    /// Noise amplification of the non-squared bound.
    pub kappa_w: Option<f64>,
    /// Per-step factor on `|w|^2` in the squared recursion.
    pub noise_gain: Option<f64>,
    /// Per-step factor on `eps_t` in the squared recursion.
    pub epsilon_gain: Option<f64>,
    pub valid: bool,
    /// Names of the violated preconditions.
    pub violations: Vec<String>,
}

pub fn compute_bound(theorem: BoundTheorem, inputs: BoundInputs) -> Result<ConvergenceBound> {
    let BoundInputs {
        alpha,
        beta,
        step_size: mu,
        op_norm,
    } = inputs;
    if !(alpha > 0.0 && beta > 0.0 && mu > 0.0 && op_norm >= 0.0)
        || ![alpha, beta, mu, op_norm].iter().all(|v| v.is_finite())
    {
        return Err(Error::Config(format!(
            "bound inputs must be positive and finite: {inputs:?}"
        )));
    }
    let mut violations = Vec::new();
    let mut require = |ok: bool, name: &str| {
        if !ok {
            violations.push(name.to_string());
        }
    };
    let mut bound = ConvergenceBound {
        theorem,
        inputs,
        rho: 0.0,
        kappa_w: None,
        noise_gain: None,
        epsilon_gain: None,
        valid: false,
        violations: Vec::new(),
    };
    match theorem {
        BoundTheorem::InexactMultiplicative { epsilon, delta } => {
            if !(epsilon >= 0.0 && epsilon.is_finite()) {
                return Err(Error::Config(format!("epsilon must be nonnegative, got {epsilon}")));
            }
            let c = 2.0 - 2.0 * delta + delta * delta;
            require((0.0..1.0).contains(&delta), "delta in [0, 1)");
            require(
                (epsilon + epsilon * epsilon).sqrt() <= delta * alpha.sqrt() / op_norm,
                "sqrt(eps + eps^2) <= delta sqrt(alpha) / |||A|||",
            );
            require(beta < c * alpha, "beta < (2 - 2 delta + delta^2) alpha");
            require(1.0 / (c * alpha) < mu, "mu > 1 / ((2 - 2 delta + delta^2) alpha)");
            require(mu <= 1.0 / beta, "mu <= 1 / beta");
            bound.rho = (1.0 / (mu * alpha) - 1.0).max(0.0).sqrt() + delta;
            bound.kappa_w = Some(2.0 * beta.sqrt() / alpha + mu.sqrt() * delta);
        }
        BoundTheorem::AdditiveClose => {
            require(beta < 1.5 * alpha, "beta < 1.5 alpha");
            require(2.0 / (3.0 * alpha) < mu, "mu > 2 / (3 alpha)");
            require(mu <= 1.0 / beta, "mu <= 1 / beta");
            bound.rho = 2.0 * (1.0 / (mu * alpha) - 1.0);
            bound.noise_gain = Some(4.0 / alpha);
            bound.epsilon_gain = Some(2.0 / (mu * alpha));
        }
        BoundTheorem::GradientFeedback { gamma } => {
            if !(gamma >= 0.0 && gamma.is_finite()) {
                return Err(Error::Config(format!("gamma must be nonnegative, got {gamma}")));
            }
            let inflate = 1.0 + 2.0 * gamma * op_norm.powi(4);
            require(
                beta <= 3.0 * alpha / (2.0 * inflate),
                "beta <= 3 alpha / (2 (1 + 2 gamma |||A|||^4))",
            );
            require(
                2.0 * inflate / (3.0 * alpha) <= mu,
                "mu >= 2 (1 + 2 gamma |||A|||^4) / (3 alpha)",
            );
            require(mu <= 1.0 / beta, "mu <= 1 / beta");
            bound.rho = 2.0 * (inflate / (mu * alpha) - 1.0);
            bound.noise_gain = Some(4.0 / alpha * (1.0 + gamma * op_norm * op_norm / mu));
        }
    }
    require(bound.rho < 1.0, "rho < 1");
    bound.valid = violations.is_empty();
    bound.violations = violations;
    Ok(bound)
}

/// Outcome of checking recorded errors against a bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub passed: bool,
    /// Right-hand side per record (same units as the compared error).
    pub rhs: Vec<f64>,
    /// First record index violating its bound.
    pub first_failure: Option<usize>,
    pub note: Option<String>,
}

const SLACK: f64 = 1e-9;

fn missing_truth() -> BoundCheck {
    BoundCheck {
        passed: false,
        rhs: Vec::new(),
        first_failure: None,
        note: Some("records carry no solution error; supply ground truth to the run".into()),
    }
}

fn finish(lhs: &[f64], rhs: Vec<f64>) -> BoundCheck {
    let first_failure = lhs.iter().zip(&rhs).position(|(l, r)| *l > r + SLACK);
    BoundCheck {
        passed: first_failure.is_none(),
        rhs,
        first_failure,
        note: None,
    }
}

/// Checks every record against the unrolled bound of `bound.theorem`.
///
/// Record `k` holds the tolerance used to produce `x^k`, so the
/// tolerance term is `gain * sum_{i<=k} rho^{k-i} eps_i`.
pub fn residual_bound_check(
    records: &[IterationRecord],
    bound: &ConvergenceBound,
    init_error: f64,
    noise_norm: f64,
) -> BoundCheck {
    let Some(errors) = records.iter().map(|r| r.solution_error).collect::<Option<Vec<f64>>>() else {
        return missing_truth();
    };
    let rho = bound.rho;
    let w2 = noise_norm * noise_norm;
    match bound.theorem {
        BoundTheorem::InexactMultiplicative { .. } => {
            let kappa = bound.kappa_w.unwrap_or(0.0);
            let noise = if noise_norm > 0.0 {
                kappa / (1.0 - rho) * noise_norm
            } else {
                0.0
            };
            let rhs = (0..errors.len())
                .map(|k| rho.powi(k as i32) * init_error + noise)
                .collect();
            finish(&errors, rhs)
        }
        BoundTheorem::AdditiveClose | BoundTheorem::GradientFeedback { .. } => {
            let noise_gain = bound.noise_gain.unwrap_or(0.0);
            let eps_gain = bound.epsilon_gain.unwrap_or(0.0);
            let mut rhs = Vec::with_capacity(errors.len());
            let (mut decay, mut eps_term, mut geo) = (init_error * init_error, 0.0, 0.0);
            for (k, r) in records.iter().enumerate() {
                if k > 0 {
                    decay *= rho;
                    eps_term = rho * eps_term + eps_gain * r.epsilon;
                    geo = rho * geo + 1.0;
                }
                rhs.push(decay + eps_term + noise_gain * geo * w2);
            }
            let lhs: Vec<f64> = errors.iter().map(|e| e * e).collect();
            finish(&lhs, rhs)
        }
    }
}

/// Single-step noiseless contraction
/// `e_{k}^2 <= (1/(mu alpha) - 1) e_{k-1}^2 + eps_k / (mu alpha)`.
///
/// Record 0 has no predecessor; its right-hand side is its own error.
pub fn noiseless_step_check(records: &[IterationRecord], alpha: f64, step_size: f64) -> BoundCheck {
    let Some(errors) = records.iter().map(|r| r.solution_error).collect::<Option<Vec<f64>>>() else {
        return missing_truth();
    };
    let c = 1.0 / (step_size * alpha);
    let lhs: Vec<f64> = errors.iter().map(|e| e * e).collect();
    let mut rhs = Vec::with_capacity(lhs.len());
    for (k, r) in records.iter().enumerate() {
        rhs.push(if k == 0 {
            lhs[0]
        } else {
            (c - 1.0) * lhs[k - 1] + c * r.epsilon
        });
    }
    finish(&lhs, rhs)
}
