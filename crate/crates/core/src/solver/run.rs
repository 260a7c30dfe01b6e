use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{next_epsilon, ScheduleState, SolverConfig, Strategy, ToleranceKind};
use crate::covertree::{nn_exact_brute, CoverTree, Tolerance};
use crate::error::{Error, Result};
use crate::model::{product_project, Dictionary, ProductImage, ProjectionMode, TissueParams};
use crate::operators::LinearOperator;
use crate::scalar::{self, Real};

/// Reference solution used only for telemetry.
#[derive(Debug, Clone, Copy)]
pub struct GroundTruth<'a, T> {
    pub image: &'a ProductImage<T>,
    /// Per-pixel parameters; `None` marks background.
    pub params: Option<&'a [Option<TissueParams>]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    /// `k`; record 0 describes `x^0 = 0`.
    pub iter: usize,
    /// `|y - A x^k|^2`
    pub objective: f64,
    /// `|x^k - x_0|`
    pub solution_error: Option<f64>,
    /// `|x^k - x_0| / |x_0|`
    pub relative_error: Option<f64>,
    pub t1_mae: Option<f64>,
    pub t2_mae: Option<f64>,
    /// Tolerance used to produce `x^k` (0 for `k = 0`).
    pub epsilon: f64,
    pub distances_iter: u64,
    pub distances_cum: u64,
    pub clamped_pixels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Relative iterate change fell below the tolerance after this iteration.
    Converged(usize),
    MaxIters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput<T> {
    pub image: ProductImage<T>,
    pub atom_ids: Vec<usize>,
    pub gammas: Vec<T>,
    pub records: Vec<IterationRecord>,
    pub stop: StopReason,
    pub step_size: f64,
}

/// Runs IPG from `x^0 = 0`:
/// `x^{k+1} = P(x^k + mu A^H (y - A x^k))`.
pub fn ipg_run<T: Real, A: LinearOperator<T> + ?Sized>(
    op: &A,
    dict: &Dictionary<T>,
    tree: Option<&CoverTree<T>>,
    y: &[Complex<T>],
    config: &SolverConfig,
    truth: Option<GroundTruth<'_, T>>,
) -> Result<RunOutput<T>> {
    config.validate()?;
    let slices = dict.dim();
    let n = op.input_dim();
    if n % slices != 0 {
        return Err(Error::DimensionMismatch {
            expected: slices * (n / slices).max(1),
            found: n,
        });
    }
    let pixels = n / slices;
    if y.len() != op.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: op.output_dim(),
            found: y.len(),
        });
    }
    if let Some(t) = &truth {
        if t.image.slices() != slices || t.image.pixels() != pixels {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: t.image.slices() * t.image.pixels(),
            });
        }
        if let Some(p) = t.params {
            if p.len() != pixels {
                return Err(Error::DimensionMismatch {
                    expected: pixels,
                    found: p.len(),
                });
            }
        }
    }
    if matches!(config.strategy, Strategy::Tree { .. }) && tree.is_none() {
        return Err(Error::Config("tree strategy needs a tree".into()));
    }

    let mu = config.step_size.unwrap_or(n as f64 / op.output_dim() as f64);
    let mu_t = T::lit(mu);
    let telemetry = Telemetry::new(dict, truth);

    let mut x = scalar::zeros::<T>(n);
    let mut ax = scalar::zeros::<T>(op.output_dim());
    let mut atoms = vec![tree.map_or(0, |t| t.root().point_id); pixels];
    let mut gammas = vec![T::zero(); pixels];
    let mut cum = 0u64;
    let mut records = vec![telemetry.record(0, &x, &ax, y, &atoms, &gammas, 0.0, 0, 0, 0)];
    let mut stop = StopReason::MaxIters;

    for t in 0..config.max_iters {
        let residual: Vec<Complex<T>> = y.iter().zip(&ax).map(|(a, b)| a - b).collect();
        let step = op.adjoint(&residual)?;
        let eps = match config.strategy {
            Strategy::Brute => 0.0,
            Strategy::Tree { schedule, .. } => next_epsilon(
                &schedule,
                &ScheduleState {
                    iteration: t,
                    objective: scalar::norm_sqr(&residual).as_f64(),
                    gradient_norm_sq: scalar::norm_sqr(&step).as_f64(),
                    step_size: mu,
                },
            )?,
        };
        let z: Vec<Complex<T>> = x.iter().zip(&step).map(|(a, g)| a + g * mu_t).collect();
        if !scalar::is_finite(&z) {
            return Err(Error::NonFiniteIterate { iteration: t + 1 });
        }
        let z = ProductImage::from_vec(slices, pixels, z)?;
        let mode = match config.strategy {
            Strategy::Brute => ProjectionMode::Exact,
            Strategy::Tree {
                kind: ToleranceKind::Multiplicative,
                ..
            } => ProjectionMode::Tree(Tolerance::Multiplicative(T::lit(eps))),
            // the image-level budget is split evenly over pixels
            Strategy::Tree {
                kind: ToleranceKind::Additive,
                ..
            } => ProjectionMode::Tree(Tolerance::Additive(T::lit(eps / pixels as f64))),
        };
        let proj = product_project(dict, tree, &z, &atoms, mode)?;
        if config.audit_fraction > 0.0 {
            audit(dict, &z, &proj.atom_ids, mode, config, t + 1)?;
        }

        let next = proj.image.into_vec();
        if !scalar::is_finite(&next) {
            return Err(Error::NonFiniteIterate { iteration: t + 1 });
        }
        let change = scalar::dist(&next, &x).as_f64() / scalar::norm(&x).as_f64().max(1.0);
        x = next;
        ax = op.apply(&x)?;
        atoms = proj.atom_ids;
        gammas = proj.gammas;
        cum += proj.distances_evaluated;
        records.push(telemetry.record(
            t + 1,
            &x,
            &ax,
            y,
            &atoms,
            &gammas,
            eps,
            proj.distances_evaluated,
            cum,
            proj.clamped_pixels,
        ));
        if change < config.tolerance {
            stop = StopReason::Converged(t + 1);
            break;
        }
    }

    Ok(RunOutput {
        image: ProductImage::from_vec(slices, pixels, x)?,
        atom_ids: atoms,
        gammas,
        records,
        stop,
        step_size: mu,
    })
}

struct Telemetry<'a, T> {
    dict: &'a Dictionary<T>,
    truth: Option<GroundTruth<'a, T>>,
    truth_norm: f64,
}

impl<'a, T: Real> Telemetry<'a, T> {
    fn new(dict: &'a Dictionary<T>, truth: Option<GroundTruth<'a, T>>) -> Self {
        let truth_norm = truth.map_or(0.0, |t| scalar::norm(t.image.as_slice()).as_f64());
        Self {
            dict,
            truth,
            truth_norm,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn record(
        &self,
        iter: usize,
        x: &[Complex<T>],
        ax: &[Complex<T>],
        y: &[Complex<T>],
        atoms: &[usize],
        gammas: &[T],
        epsilon: f64,
        distances_iter: u64,
        distances_cum: u64,
        clamped_pixels: usize,
    ) -> IterationRecord {
        let objective = scalar::dist_sqr(y, ax).as_f64();
        let (mut solution_error, mut relative_error, mut t1_mae, mut t2_mae) = (None, None, None, None);
        if let Some(t) = &self.truth {
            let e = scalar::dist(x, t.image.as_slice()).as_f64();
            solution_error = Some(e);
            relative_error = Some(if self.truth_norm > 0.0 { e / self.truth_norm } else { e });
            if let Some(params) = t.params {
                let (mut s1, mut s2) = (0.0, 0.0);
                for (j, p) in params.iter().enumerate() {
                    if let Some(p) = p {
                        let hat = if gammas[j] > T::zero() {
                            self.dict.params()[atoms[j]]
                        } else {
                            TissueParams::default()
                        };
                        s1 += (hat.t1_ms - p.t1_ms).abs();
                        s2 += (hat.t2_ms - p.t2_ms).abs();
                    }
                }
                t1_mae = Some(s1 / params.len() as f64);
                t2_mae = Some(s2 / params.len() as f64);
            }
        }
        IterationRecord {
            iter,
            objective,
            solution_error,
            relative_error,
            t1_mae,
            t2_mae,
            epsilon,
            distances_iter,
            distances_cum,
            clamped_pixels,
        }
    }
}

/// Re-checks a random share of the pixel projections against an
/// exhaustive search.
fn audit<T: Real>(
    dict: &Dictionary<T>,
    z: &ProductImage<T>,
    ids: &[usize],
    mode: ProjectionMode<T>,
    config: &SolverConfig,
    iteration: usize,
) -> Result<()> {
    let tol = match mode {
        ProjectionMode::Exact => return Ok(()),
        ProjectionMode::Tree(tol) => tol,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (iteration as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let slack = 1e-12;
    for (j, &id) in ids.iter().enumerate() {
        if rng.random::<f64>() >= config.audit_fraction {
            continue;
        }
        let col = z.column(j);
        let norm = scalar::norm(&col);
        if norm == T::zero() {
            continue;
        }
        let q: Vec<Complex<T>> = col.iter().map(|c| c / norm).collect();
        let best = nn_exact_brute(dict.normalized(), &q)?.distance.as_f64();
        let got = scalar::dist(&q, dict.normalized_atom(id)).as_f64();
        let violation = match tol {
            Tolerance::Multiplicative(e) => {
                let limit = (1.0 + e.as_f64()) * best;
                (got > limit * (1.0 + slack)).then(|| format!("distance {got} exceeds (1 + {e}) * {best}"))
            }
            Tolerance::Additive(e) => {
                let e = e.as_f64() / norm.as_f64().powi(2);
                let limit = best * best + e;
                (got * got > limit + slack).then(|| format!("squared distance {} exceeds {best}^2 + {e}", got * got))
            }
        };
        if let Some(detail) = violation {
            return Err(Error::ContractViolation {
                iteration,
                pixel: j,
                detail,
            });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covertree::PointSet;
    use crate::operators::DenseOperator;
    use crate::solver::EpsilonSchedule;
    use rand_distr::StandardNormal;

    fn random_dict(d: usize, n: usize, seed: u64) -> Dictionary<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<Complex<f64>>> = (0..d)
            .map(|_| {
                (0..n)
                    .map(|_| Complex::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                    .collect()
            })
            .collect();
        Dictionary::unlabeled(PointSet::from_rows(&rows).unwrap()).unwrap()
    }

    fn truth(dict: &Dictionary<f64>, pixels: usize, seed: u64) -> (ProductImage<f64>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ids: Vec<usize> = (0..pixels).map(|_| rng.random_range(0..dict.len())).collect();
        let gammas: Vec<f64> = (0..pixels).map(|_| 0.5 + rng.random::<f64>()).collect();
        (ProductImage::from_atoms(dict, &ids, &gammas).unwrap(), ids)
    }

    #[test]
    fn identity_operator_is_a_one_step_fixed_point() {
        let dict = random_dict(30, 8, 1);
        let (x0, ids) = truth(&dict, 5, 2);
        let op = DenseOperator::<f64>::identity(40);
        let y = op.apply(x0.as_slice()).unwrap();
        let cfg = SolverConfig::default();
        let out = ipg_run(
            &op,
            &dict,
            None,
            &y,
            &cfg,
            Some(GroundTruth {
                image: &x0,
                params: None,
            }),
        )
        .unwrap();
        assert_eq!(out.atom_ids, ids);
        assert!(out.records[1].objective < 1e-24);
        assert_eq!(out.stop, StopReason::Converged(2));
        assert!(out.records[1].solution_error.unwrap() < 1e-12);
        assert_eq!(out.step_size, 1.0);
    }

    #[test]
    fn telemetry_is_deterministic_and_cumulative() {
        let dict = random_dict(60, 8, 3);
        let tree = dict.build_tree().unwrap();
        let (x0, _) = truth(&dict, 6, 4);
        let op = DenseOperator::<f64>::gaussian(400, 48, 5);
        let y = op.apply(x0.as_slice()).unwrap();
        let cfg = SolverConfig {
            step_size: Some(1.0),
            strategy: Strategy::Tree {
                kind: ToleranceKind::Multiplicative,
                schedule: EpsilonSchedule::Constant(0.4),
            },
            audit_fraction: 1.0,
            ..SolverConfig::default()
        };
        let gt = Some(GroundTruth {
            image: &x0,
            params: None,
        });
        let a = ipg_run(&op, &dict, Some(&tree), &y, &cfg, gt).unwrap();
        let b = ipg_run(&op, &dict, Some(&tree), &y, &cfg, gt).unwrap();
        assert_eq!(a, b);
        let mut cum = 0;
        for r in &a.records {
            cum += r.distances_iter;
            assert_eq!(r.distances_cum, cum);
        }
    }

    #[test]
    fn additive_feedback_runs_under_audit() {
        let dict = random_dict(80, 6, 6);
        let tree = dict.build_tree().unwrap();
        let (x0, _) = truth(&dict, 4, 7);
        let op = DenseOperator::<f64>::gaussian(300, 24, 8);
        let y = op.apply(x0.as_slice()).unwrap();
        let cfg = SolverConfig {
            step_size: Some(1.0),
            strategy: Strategy::Tree {
                kind: ToleranceKind::Additive,
                schedule: EpsilonSchedule::ObjectiveFeedback { gamma: 0.1 },
            },
            audit_fraction: 1.0,
            ..SolverConfig::default()
        };
        let out = ipg_run(&op, &dict, Some(&tree), &y, &cfg, None).unwrap();
        assert!(out.records.last().unwrap().objective < out.records[0].objective);
    }

    #[test]
    fn audit_catches_a_bad_selection() {
        let dict = random_dict(20, 4, 9);
        let z = ProductImage::from_vec(4, 1, dict.atom(3).to_vec()).unwrap();
        let cfg = SolverConfig {
            audit_fraction: 1.0,
            ..SolverConfig::default()
        };
        let err = audit(&dict, &z, &[0], ProjectionMode::Tree(Tolerance::exact()), &cfg, 4).unwrap_err();
        assert!(matches!(
            err,
            Error::ContractViolation {
                iteration: 4,
                pixel: 0,
                ..
            }
        ));
        audit(&dict, &z, &[3], ProjectionMode::Tree(Tolerance::exact()), &cfg, 4).unwrap();
    }

    #[test]
    fn non_finite_measurements_are_reported() {
        let dict = random_dict(10, 4, 10);
        let op = DenseOperator::<f64>::identity(8);
        let mut y = scalar::zeros::<f64>(8);
        y[2] = Complex::new(f64::INFINITY, 0.0);
        let err = ipg_run(&op, &dict, None, &y, &SolverConfig::default(), None).unwrap_err();
        assert!(matches!(err, Error::NonFiniteIterate { iteration: 1 }));
    }

    #[test]
    fn mae_counts_background_in_the_denominator() {
        let rows = vec![vec![Complex::new(1.0, 0.0)], vec![Complex::new(0.0, 1.0)]];
        let params = vec![TissueParams::new(800.0, 80.0), TissueParams::new(1000.0, 100.0)];
        let dict = Dictionary::new(PointSet::from_rows(&rows).unwrap(), params).unwrap();
        let x0 = ProductImage::from_atoms(&dict, &[0, 0], &[1.0, 0.0]).unwrap();
        let labels = vec![Some(TissueParams::new(800.0, 80.0)), None];
        let tel = Telemetry::new(
            &dict,
            Some(GroundTruth {
                image: &x0,
                params: Some(&labels),
            }),
        );
        let x = x0.as_slice().to_vec();
        let rec = tel.record(1, &x, &x, &x, &[1, 0], &[1.0, 0.0], 0.0, 0, 0, 0);
        assert_eq!(rec.t1_mae, Some(200.0 / 2.0));
        assert_eq!(rec.t2_mae, Some(20.0 / 2.0));
    }
}
