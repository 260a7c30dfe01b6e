//! Discrete-time bSSFP magnetization recursion.
//!
//! Per repetition: instantaneous rotation about the x axis by the flip
//! angle, transverse readout `(Mx + i My) * exp(-TE/T2)`, then free
//! relaxation over the whole TR with `E1 = exp(-TR/T1)`,
//! `E2 = exp(-TR/T2)` and recovery of `Mz` toward 1. Off-resonance is zero.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::covertree::PointSet;
use crate::error::{Error, Result};
use crate::model::{Dictionary, TissueParams};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationSequence {
    flip_angles_deg: Vec<f64>,
    tr_ms: f64,
    te_ms: f64,
}

impl ExcitationSequence {
    pub fn new(flip_angles_deg: Vec<f64>, tr_ms: f64, te_ms: f64) -> Result<Self> {
        if flip_angles_deg.is_empty() {
            return Err(Error::Config("sequence needs at least one excitation".into()));
        }
        if let Some(a) = flip_angles_deg.iter().find(|a| !(0.0..=90.0).contains(*a)) {
            return Err(Error::Config(format!("flip angle {a} outside [0, 90] degrees")));
        }
        if !(tr_ms > 0.0 && tr_ms.is_finite() && te_ms >= 0.0 && te_ms <= tr_ms) {
            return Err(Error::Config(format!(
                "need 0 <= TE <= TR, got TE = {te_ms}, TR = {tr_ms}"
            )));
        }
        Ok(Self {
            flip_angles_deg,
            tr_ms,
            te_ms,
        })
    }

    /// Slowly varying flips from 0 to 60 degrees,
    /// `60 * (0.5 s + 0.5 sin^2(2.5 pi s))` for `s` evenly spaced in
    /// `[0, 1]`, with `TR = 37` ms and `TE = TR / 2`.
    pub fn ramp(excitations: usize) -> Result<Self> {
        let denom = excitations.saturating_sub(1).max(1) as f64;
        let flips = (0..excitations)
            .map(|k| {
                let s = k as f64 / denom;
                let wave = (2.5 * std::f64::consts::PI * s).sin();
                60.0 * (0.5 * s + 0.5 * wave * wave)
            })
            .collect();
        Self::new(flips, 37.0, 18.5)
    }

    pub fn flip_angles_deg(&self) -> &[f64] {
        &self.flip_angles_deg
    }

    pub fn tr_ms(&self) -> f64 {
        self.tr_ms
    }

    pub fn te_ms(&self) -> f64 {
        self.te_ms
    }

    pub fn len(&self) -> usize {
        self.flip_angles_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flip_angles_deg.is_empty()
    }
}

fn check_params(t1: f64, t2: f64) -> Result<()> {
    if !(t1 > 0.0 && t2 > 0.0 && t1.is_finite() && t2.is_finite()) {
        return Err(Error::Fingerprint {
            t1,
            t2,
            reason: "relaxation times must be positive and finite".into(),
        });
    }
    Ok(())
}

/// Unnormalized fingerprint, one complex sample per excitation.
pub fn bloch_fingerprint(seq: &ExcitationSequence, t1_ms: f64, t2_ms: f64) -> Result<Vec<Complex<f64>>> {
    check_params(t1_ms, t2_ms)?;
    let e1 = (-seq.tr_ms / t1_ms).exp();
    let e2 = (-seq.tr_ms / t2_ms).exp();
    let echo = (-seq.te_ms / t2_ms).exp();
    let (mut mx, mut my, mut mz) = (0.0_f64, 0.0_f64, 1.0_f64);
    let mut out = Vec::with_capacity(seq.len());
    for &deg in &seq.flip_angles_deg {
        let (s, c) = deg.to_radians().sin_cos();
        let y = c * my + s * mz;
        mz = -s * my + c * mz;
        my = y;
        out.push(Complex::new(mx * echo, my * echo));
        mx *= e2;
        my *= e2;
        mz = mz * e1 + (1.0 - e1);
    }
    Ok(out)
}

/// Admissible `(T1, T2)` pairs, `T2 <= T1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterGrid {
    pairs: Vec<TissueParams>,
}

impl ParameterGrid {
    pub fn new(pairs: Vec<TissueParams>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Config("parameter grid is empty".into()));
        }
        for p in &pairs {
            check_params(p.t1_ms, p.t2_ms)?;
            if p.t2_ms > p.t1_ms {
                return Err(Error::Fingerprint {
                    t1: p.t1_ms,
                    t2: p.t2_ms,
                    reason: "T2 exceeds T1".into(),
                });
            }
        }
        Ok(Self { pairs })
    }

    /// Cartesian product of log-spaced axes, T1 outer, keeping `T2 <= T1`.
    pub fn log_spaced(t1: (f64, f64), t1_steps: usize, t2: (f64, f64), t2_steps: usize) -> Result<Self> {
        let a1 = log_axis(t1, t1_steps)?;
        let a2 = log_axis(t2, t2_steps)?;
        let pairs = a1
            .iter()
            .flat_map(|&x| {
                a2.iter()
                    .filter(move |&&y| y <= x)
                    .map(move |&y| TissueParams::new(x, y))
            })
            .collect();
        Self::new(pairs)
    }

    /// T1 in 100..5000 ms and T2 in 20..1800 ms, 40 log steps each.
    pub fn desk() -> Self {
        Self::log_spaced((100.0, 5000.0), 40, (20.0, 1800.0), 40).expect("desk grid is admissible")
    }

    /// `count` log-uniform draws from the desk ranges, kept when `T2 <= T1`.
    pub fn random(count: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draw = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| (lo.ln() + rng.random::<f64>() * (hi / lo).ln()).exp();
        let mut pairs = Vec::with_capacity(count);
        while pairs.len() < count {
            let t1 = draw(&mut rng, 100.0, 5000.0);
            let t2 = draw(&mut rng, 20.0, 1800.0);
            if t2 <= t1 {
                pairs.push(TissueParams::new(t1, t2));
            }
        }
        Self::new(pairs)
    }

    pub fn pairs(&self) -> &[TissueParams] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Grid pair closest to `(t1, t2)` in log distance.
    pub fn nearest(&self, t1_ms: f64, t2_ms: f64) -> TissueParams {
        let d = |p: &TissueParams| (p.t1_ms / t1_ms).ln().powi(2) + (p.t2_ms / t2_ms).ln().powi(2);
        *self
            .pairs
            .iter()
            .min_by(|a, b| d(a).total_cmp(&d(b)))
            .expect("grid is nonempty")
    }
}

fn log_axis((lo, hi): (f64, f64), steps: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && steps >= 1) {
        return Err(Error::Config(format!("bad log axis [{lo}, {hi}] with {steps} steps")));
    }
    if steps == 1 {
        return Ok(vec![lo]);
    }
    let r = (hi / lo).ln() / (steps - 1) as f64;
    Ok((0..steps)
        .map(|k| if k == steps - 1 { hi } else { lo * (r * k as f64).exp() })
        .collect())
}

/// Unit-norm fingerprints of every grid entry, row `i` from `grid[i]`.
pub fn build_dictionary<T: Real>(seq: &ExcitationSequence, grid: &ParameterGrid) -> Result<Dictionary<T>> {
    let rows: Vec<Vec<Complex<T>>> = grid
        .pairs
        .par_iter()
        .map(|p| {
            let f = bloch_fingerprint(seq, p.t1_ms, p.t2_ms)?;
            let norm = f.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            if !(norm > 0.0) {
                return Err(Error::Fingerprint {
                    t1: p.t1_ms,
                    t2: p.t2_ms,
                    reason: "fingerprint has zero norm".into(),
                });
            }
            Ok(f.iter()
                .map(|c| Complex::new(T::lit(c.re / norm), T::lit(c.im / norm)))
                .collect())
        })
        .collect::<Result<_>>()?;
    Dictionary::new(PointSet::from_rows(&rows)?, grid.pairs.clone())
}
