//! Exact and inexact iterative projected gradient.

mod bound;
mod run;

pub use bound::{
    compute_bound, noiseless_step_check, residual_bound_check, BoundCheck, BoundInputs, BoundTheorem, ConvergenceBound,
};
pub use run::{ipg_run, GroundTruth, IterationRecord, RunOutput, StopReason};

use crate::error::{Error, Result};

/// Units of the per-iteration tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToleranceKind {
    /// `(1 + eps)` on distances.
    Multiplicative,
    /// `+ eps` on the squared residual of the whole image.
    Additive,
}

/// Per-iteration approximation level `eps_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonSchedule {
    Constant(f64),
    /// `initial * decay^t`
    Geometric {
        initial: f64,
        decay: f64,
    },
    /// `gamma * mu * |y - A x^t|^2`. Additive only.
    ObjectiveFeedback {
        gamma: f64,
    },
    /// `gamma * |A^H (A x^t - y)|^2`. Additive only.
    GradientFeedback {
        gamma: f64,
    },
}

impl EpsilonSchedule {
    pub fn validate(&self, kind: ToleranceKind) -> Result<()> {
        let finite_nonneg = |v: f64, what: &str| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be finite and nonnegative, got {v}")))
            }
        };
        match *self {
            EpsilonSchedule::Constant(e) => finite_nonneg(e, "epsilon"),
            EpsilonSchedule::Geometric { initial, decay } => {
                finite_nonneg(initial, "initial epsilon")?;
                if !(decay > 0.0 && decay < 1.0) {
                    return Err(Error::Config(format!("decay must lie in (0, 1), got {decay}")));
                }
                Ok(())
            }
            EpsilonSchedule::ObjectiveFeedback { gamma } | EpsilonSchedule::GradientFeedback { gamma } => {
                finite_nonneg(gamma, "gamma")?;
                if kind != ToleranceKind::Additive {
                    return Err(Error::Config(
                        "feedback schedules emit squared-distance units and need additive tolerance".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Quantities available when choosing `eps_t` for the step from `x^t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleState {
    pub iteration: usize,
    /// `|y - A x^t|^2`
    pub objective: f64,
    /// `|A^H (A x^t - y)|^2`
    pub gradient_norm_sq: f64,
    pub step_size: f64,
}

pub fn next_epsilon(schedule: &EpsilonSchedule, state: &ScheduleState) -> Result<f64> {
    let ok = |v: f64| v.is_finite() && v >= 0.0;
    if !(ok(state.objective) && ok(state.gradient_norm_sq) && state.step_size > 0.0 && state.step_size.is_finite()) {
        return Err(Error::Config(format!("invalid schedule state {state:?}")));
    }
    let eps = match *schedule {
        EpsilonSchedule::Constant(e) => {
            if !ok(e) {
                return Err(Error::Config(format!("epsilon must be nonnegative, got {e}")));
            }
            e
        }
        EpsilonSchedule::Geometric { initial, decay } => {
            if !ok(initial) || !(decay > 0.0 && decay < 1.0) {
                return Err(Error::Config(format!(
                    "invalid geometric schedule ({initial}, {decay})"
                )));
            }
            initial * decay.powi(state.iteration as i32)
        }
        EpsilonSchedule::ObjectiveFeedback { gamma } => {
            if !ok(gamma) {
                return Err(Error::Config(format!("gamma must be nonnegative, got {gamma}")));
            }
            gamma * state.step_size * state.objective
        }
        EpsilonSchedule::GradientFeedback { gamma } => {
            if !ok(gamma) {
                return Err(Error::Config(format!("gamma must be nonnegative, got {gamma}")));
            }
            gamma * state.gradient_norm_sq
        }
    };
    Ok(eps)
}

/// How pixels are projected during a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// Exhaustive scan of the dictionary.
    Brute,
    /// Cover tree search with a scheduled tolerance. `Constant(0.0)` is an
    /// exact tree search.
    Tree {
        kind: ToleranceKind,
        schedule: EpsilonSchedule,
    },
}

impl Strategy {
    pub fn tree_exact() -> Self {
        Strategy::Tree {
            kind: ToleranceKind::Multiplicative,
            schedule: EpsilonSchedule::Constant(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// `mu`; `None` means `n / m`.
    pub step_size: Option<f64>,
    pub max_iters: usize,
    /// Stop when `|x^{k+1} - x^k| / max(|x^k|, 1)` drops below this.
    pub tolerance: f64,
    pub strategy: Strategy,
    pub seed: u64,
    /// Share of pixel projections re-checked against an exhaustive search.
    pub audit_fraction: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step_size: None,
            max_iters: 40,
            tolerance: 1e-6,
            strategy: Strategy::Brute,
            seed: 0,
            audit_fraction: 0.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(mu) = self.step_size {
            if !(mu > 0.0 && mu.is_finite()) {
                return Err(Error::Config(format!("step size must be positive, got {mu}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Config(format!("invalid stop tolerance {}", self.tolerance)));
        }
        if !(0.0..=1.0).contains(&self.audit_fraction) {
            return Err(Error::Config(format!(
                "audit fraction {} outside [0, 1]",
                self.audit_fraction
            )));
        }
        if let Strategy::Tree { kind, schedule } = self.strategy {
            schedule.validate(kind)?;
        }
        Ok(())
    }
}
