//! Acceptance suite. Runs every criterion in order, prints one line each and
//! exits nonzero if any failed.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::Instant;

use cover_ipg::covertree::{nn_exact_brute, query_cost_profile, CoverTree, PointSet, Tolerance};
use cover_ipg::model::{Dictionary, ProductImage};
use cover_ipg::mrf::{bloch_fingerprint, build_dictionary, ExcitationSequence, ParameterGrid};
use cover_ipg::operators::{
    estimate_bilipschitz, operator_norm, DenseOperator, EpiOperator, EpiPattern, LinearOperator, ShiftRule,
};
use cover_ipg::solver::*;
use cover_ipg::C64;
use cover_ipg_harness::{self as harness, execute, ExperimentConfig, Method, RunSpec, Workspace};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn gaussian_set(count: usize, dim: usize, seed: u64) -> PointSet<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..count)
        .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    PointSet::from_real_rows(&rows).unwrap()
}

fn real_query(dim: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..dim).map(|_| C64::new(rng.sample(StandardNormal), 0.0)).collect()
}

fn c1_invariants() -> Outcome {
    let start = Instant::now();
    let sizes = [10, 100, 1000];
    let dims = [2, 3, 16];
    for i in 0..50 {
        let (d, dim) = (sizes[i % 3], dims[(i / 3) % 3]);
        let tree = CoverTree::build(gaussian_set(d, dim, 100 + i as u64)).map_err(|e| e.to_string())?;
        let report = tree.validate();
        ensure(report.all_passed(), || format!("set {i} (d={d}, dim={dim}): {report}"))?;
    }
    let t = start.elapsed().as_secs_f64();
    ensure(t < 60.0, || format!("took {t:.1} s"))?;
    Ok(format!("50 sets valid in {t:.1} s"))
}

fn c2_multiplicative() -> Outcome {
    let start = Instant::now();
    let set = gaussian_set(2000, 8, 2);
    let tree = CoverTree::build(set.clone()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut checked = 0;
    for eps in [0.0, 0.2, 0.4, 0.6, 0.8] {
        for _ in 0..1000 {
            let q = real_query(8, &mut rng);
            let warm = rng.random_range(0..set.len());
            let best = nn_exact_brute(&set, &q).unwrap().distance;
            let got = tree.ann_search(&q, warm, eps).unwrap().distance;
            ensure(got <= (1.0 + eps) * best, || {
                format!("eps {eps}: {got} > (1+eps) {best}")
            })?;
            checked += 1;
        }
    }
    let t = start.elapsed().as_secs_f64();
    ensure(t < 60.0, || format!("took {t:.1} s"))?;
    Ok(format!("{checked} queries, 0 violations, {t:.1} s"))
}

fn c3_additive() -> Outcome {
    // unit-scale points so that 1e-2 is a meaningful slack
    let set = gaussian_set(2000, 3, 3);
    let tree = CoverTree::build(set.clone()).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    for eps in [0.0, 1e-4, 1e-2] {
        for _ in 0..200 {
            let q = real_query(3, &mut rng);
            let best = nn_exact_brute(&set, &q).unwrap().distance;
            let got = tree
                .search(&q, tree.root().point_id, Tolerance::Additive(eps))
                .unwrap()
                .distance;
            ensure(got * got <= best * best + eps, || {
                format!("eps {eps}: {got}^2 > {best}^2 + eps")
            })?;
        }
    }
    Ok("600 queries, 0 violations".into())
}

fn c4_sublinear() -> Outcome {
    let seq = ExcitationSequence::ramp(64).unwrap();
    let probe = ParameterGrid::random(200, 99).unwrap();
    let queries: Vec<Vec<C64>> = probe
        .pairs()
        .iter()
        .map(|p| {
            let f = bloch_fingerprint(&seq, p.t1_ms, p.t2_ms).unwrap();
            let n = f.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            f.iter().map(|c| c / n).collect()
        })
        .collect();
    let mut medians = Vec::new();
    for (i, d) in [1000, 2000, 4000, 8000].into_iter().enumerate() {
        let grid = ParameterGrid::random(d, 40 + i as u64).unwrap();
        let dict: Dictionary<f64> = build_dictionary(&seq, &grid).map_err(|e| e.to_string())?;
        let tree = dict.build_tree().map_err(|e| e.to_string())?;
        medians.push(query_cost_profile(&tree, &queries, 0.4).unwrap().median);
    }
    let growth = medians[3] / medians[0];
    let msg = format!("median distances {medians:?}, growth {growth:.2}");
    ensure(growth < 3.0, || msg.clone())?;
    Ok(msg)
}

fn adjoint_gap<A: LinearOperator<f64>>(op: &A, rng: &mut ChaCha8Rng) -> f64 {
    let mut draw = |n: usize| -> Vec<C64> {
        (0..n)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect()
    };
    let x = draw(op.input_dim());
    let y = draw(op.output_dim());
    let dot = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(u, v)| u.conj() * v).sum::<C64>();
    let norm = |a: &[C64]| a.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let lhs = dot(&op.apply(&x).unwrap(), &y);
    let rhs = dot(&x, &op.adjoint(&y).unwrap());
    (lhs - rhs).norm() / (norm(&x) * norm(&y))
}

fn c5_adjoint() -> Outcome {
    let dense = DenseOperator::<f64>::gaussian(48, 32, 5);
    let epi = EpiOperator::<f64>::new(EpiPattern::lattice(16, 16, 32, 4, ShiftRule::Shifted).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        worst = worst.max(adjoint_gap(&dense, &mut rng));
        worst = worst.max(adjoint_gap(&epi, &mut rng));
    }
    ensure(worst <= 1e-10, || format!("worst relative gap {worst:e}"))?;
    Ok(format!("200 probes, worst relative gap {worst:.1e}"))
}

struct DenseInstance {
    dict: Dictionary<f64>,
    tree: CoverTree<f64>,
    op: DenseOperator<f64>,
    x0: ProductImage<f64>,
    alpha: f64,
    beta: f64,
    norm: f64,
}

fn random_model_point(dict: &Dictionary<f64>, pixels: usize, rng: &mut ChaCha8Rng) -> ProductImage<f64> {
    let ids: Vec<usize> = (0..pixels).map(|_| rng.random_range(0..dict.len())).collect();
    let gammas: Vec<f64> = (0..pixels).map(|_| rng.random_range(0.2..1.5)).collect();
    ProductImage::from_atoms(dict, &ids, &gammas).unwrap()
}

/// 40 atoms of 16 excitations, 4 pixels, Gaussian A with 6400 rows; the
/// embedding constants are exhaustive over x0, 0 and 200 model points.
fn dense_instance() -> DenseInstance {
    let grid = ParameterGrid::random(40, 1).unwrap();
    let dict: Dictionary<f64> = build_dictionary(&ExcitationSequence::ramp(16).unwrap(), &grid).unwrap();
    let op = DenseOperator::<f64>::gaussian(6400, 64, 3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x0 = random_model_point(&dict, 4, &mut rng);
    let mut pts = vec![x0.as_slice().to_vec(), vec![C64::new(0.0, 0.0); 64]];
    for _ in 0..200 {
        pts.push(random_model_point(&dict, 4, &mut rng).into_vec());
    }
    let est = estimate_bilipschitz(&op, &pts, usize::MAX, 0).unwrap();
    let norm = operator_norm(&op, 200, 1).unwrap();
    let tree = dict.build_tree().unwrap();
    DenseInstance {
        dict,
        tree,
        op,
        x0,
        alpha: est.alpha,
        beta: est.beta,
        norm,
    }
}

impl DenseInstance {
    fn bound(&self, mu: f64) -> ConvergenceBound {
        compute_bound(
            BoundTheorem::AdditiveClose,
            BoundInputs {
                alpha: self.alpha,
                beta: self.beta,
                step_size: mu,
                op_norm: self.norm,
            },
        )
        .unwrap()
    }

    fn run(&self, strategy: Strategy, mu: f64) -> RunOutput<f64> {
        let y = self.op.apply(self.x0.as_slice()).unwrap();
        let cfg = SolverConfig {
            step_size: Some(mu),
            strategy,
            ..SolverConfig::default()
        };
        let truth = GroundTruth {
            image: &self.x0,
            params: None,
        };
        ipg_run(&self.op, &self.dict, Some(&self.tree), &y, &cfg, Some(truth)).unwrap()
    }
}

fn errors(out: &RunOutput<f64>) -> Vec<f64> {
    out.records.iter().map(|r| r.solution_error.unwrap()).collect()
}

fn c6_exact_bound(inst: &DenseInstance) -> Outcome {
    let (a, b) = (inst.alpha, inst.beta);
    let mu = 1.0 / b;
    ensure(b < 1.5 * a, || format!("beta {b} >= 1.5 alpha {a}"))?;
    ensure(2.0 / (3.0 * a) < mu && mu <= 1.0 / b, || {
        format!("mu {mu} outside window")
    })?;
    let bound = inst.bound(mu);
    ensure(bound.valid, || format!("{:?}", bound.violations))?;
    let out = inst.run(Strategy::Brute, mu);
    let e = errors(&out);
    // contraction written out directly
    let c = 1.0 / (mu * a);
    for k in 1..e.len() {
        ensure(e[k] * e[k] <= (c - 1.0) * e[k - 1] * e[k - 1] + 1e-9, || {
            format!("step {k}: {e:?}")
        })?;
    }
    ensure(noiseless_step_check(&out.records, a, mu).passed, || {
        "step check failed".into()
    })?;
    let check = residual_bound_check(&out.records, &bound, e[0], 0.0);
    ensure(check.passed, || {
        format!("residual check failed at {:?}", check.first_failure)
    })?;
    Ok(format!(
        "alpha {a:.4} beta {b:.4} rho {:.3}, error {:.2e} -> {:.2e} in {} iterations",
        bound.rho,
        e[0],
        e.last().unwrap(),
        e.len() - 1
    ))
}

fn c7_geometric(inst: &DenseInstance) -> Outcome {
    let mu = 1.0 / inst.beta;
    let bound = inst.bound(mu);
    let e0 = inst.x0.as_slice().iter().map(|c| c.norm_sqr()).sum::<f64>();
    let r = 0.5 * bound.rho;
    let out = inst.run(
        Strategy::Tree {
            kind: ToleranceKind::Additive,
            schedule: EpsilonSchedule::Geometric {
                initial: 0.5 * e0,
                decay: r,
            },
        },
        mu,
    );
    let e = errors(&out);
    let check = residual_bound_check(&out.records, &bound, e[0], 0.0);
    ensure(check.passed, || {
        format!("residual check failed at {:?}", check.first_failure)
    })?;
    let first = e[0] * e[0];
    let rate = e
        .iter()
        .enumerate()
        .skip(1)
        .take_while(|(_, v)| **v > 1e-7 * e[0])
        .map(|(k, v)| (v * v / first).powf(1.0 / k as f64))
        .fold(0.0, f64::max);
    let msg = format!("measured rate {rate:.3}, rho {:.3}, decay {r:.3}", bound.rho);
    ensure(rate <= bound.rho + 0.05, || msg.clone())?;
    Ok(msg)
}

fn desk_config(dir: &Path, extra: &str) -> ExperimentConfig {
    let path = dir.join("exp.toml");
    fs::write(
        &path,
        format!(
            "seed = 7\noutput_dir = \"out\"\n[dictionary]\nexcitations = 128\nt1_steps = 45\nt2_steps = 45\n{extra}"
        ),
    )
    .unwrap();
    ExperimentConfig::load(&path).unwrap()
}

fn c8_end_to_end() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = desk_config(dir.path(), "");
    let d = harness::gen_dict(&cfg).map_err(|e| e.to_string())?;
    harness::build_tree(&cfg).map_err(|e| e.to_string())?;
    harness::gen_phantom(&cfg).map_err(|e| e.to_string())?;
    ensure(d >= 1500, || format!("dictionary has {d} atoms"))?;
    let ws = Workspace::load(cfg, true).map_err(|e| e.to_string())?;
    let tissue: Vec<usize> = (0..ws.tissue.len()).filter(|&j| ws.tissue[j].is_some()).collect();

    let mut notes = vec![format!("d={d}")];
    for ratio in [8, 16] {
        let run = |method, epsilon| execute(&ws, RunSpec { method, epsilon, ratio }).map_err(|e| e.to_string());
        let brute = run(Method::BruteExact, 0.0)?;
        let tree = run(Method::TreeExact, 0.0)?;
        let ann = run(Method::TreeAnn, 0.4)?;
        let (b, t, a) = (&brute.summary, &tree.summary, &ann.summary);
        ensure(tree.output.atom_ids == brute.output.atom_ids, || {
            format!("r{ratio}: tree ids differ")
        })?;
        ensure(t.cum_distances < b.cum_distances, || {
            format!("r{ratio}: tree {} vs brute {}", t.cum_distances, b.cum_distances)
        })?;
        let speedup = b.cum_distances as f64 / a.cum_distances as f64;
        ensure(a.final_mse <= 2.0 * b.final_mse, || {
            format!("r{ratio}: ann mse {:e} vs exact {:e}", a.final_mse, b.final_mse)
        })?;
        ensure(speedup >= 10.0, || format!("r{ratio}: speedup {speedup:.1}"))?;
        notes.push(format!(
            "r{ratio}: mse exact {:.1e} ann {:.1e}, {speedup:.0}x fewer distances",
            b.final_mse, a.final_mse
        ));
    }

    let full = execute(
        &ws,
        RunSpec {
            method: Method::BruteExact,
            epsilon: 0.0,
            ratio: 1,
        },
    )
    .map_err(|e| e.to_string())?;
    let s = &full.summary;
    ensure(s.iterations <= 2, || {
        format!("full sampling took {} iterations", s.iterations)
    })?;
    ensure(s.t1_mae == 0.0 && s.t2_mae == 0.0, || {
        format!("full sampling MAE {} {}", s.t1_mae, s.t2_mae)
    })?;
    ensure(
        tissue.iter().all(|&j| full.output.atom_ids[j] == ws.truth.atom_ids[j]),
        || "full sampling picked a wrong atom".into(),
    )?;
    notes.push(format!("full sampling exact in {} iterations", s.iterations));

    let t = start.elapsed().as_secs_f64();
    ensure(t < 600.0, || format!("took {t:.0} s"))?;
    notes.push(format!("{t:.0} s"));
    Ok(notes.join("; "))
}

type Mat4 = [[f64; 4]; 4];

fn mat_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = [[0.0; 4]; 4];
    for (i, row) in c.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (0..4).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

/// Composes rotation and relaxation as homogeneous 4x4 maps applied to
/// `(0, 0, 1, 1)`.
fn matrix_fingerprint(seq: &ExcitationSequence, t1: f64, t2: f64) -> Vec<C64> {
    let (e1, e2) = ((-seq.tr_ms() / t1).exp(), (-seq.tr_ms() / t2).exp());
    let echo = (-seq.te_ms() / t2).exp();
    let relax: Mat4 = [
        [e2, 0.0, 0.0, 0.0],
        [0.0, e2, 0.0, 0.0],
        [0.0, 0.0, e1, 1.0 - e1],
        [0.0, 0.0, 0.0, 1.0],
    ];
    let mut acc: Mat4 = [[0.0; 4]; 4];
    for (i, row) in acc.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    let mut out = Vec::new();
    for &deg in seq.flip_angles_deg() {
        let (s, c) = deg.to_radians().sin_cos();
        let rot: Mat4 = [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, c, s, 0.0],
            [0.0, -s, c, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ];
        let excited = mat_mul(&rot, &acc);
        let m = |r: usize| excited[r][2] + excited[r][3];
        out.push(C64::new(m(0) * echo, m(1) * echo));
        acc = mat_mul(&relax, &excited);
    }
    out
}

fn c9_bloch() -> Outcome {
    let seq = ExcitationSequence::ramp(128).unwrap();
    let grid = ParameterGrid::random(100, 90).unwrap();
    let mut worst = 0.0_f64;
    for p in grid.pairs() {
        let a = bloch_fingerprint(&seq, p.t1_ms, p.t2_ms).unwrap();
        let b = matrix_fingerprint(&seq, p.t1_ms, p.t2_ms);
        let diff = a.iter().zip(&b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
        let norm = b.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(diff / norm);
    }
    ensure(worst <= 1e-10, || format!("worst relative error {worst:e}"))?;
    Ok(format!("100 pairs, worst relative error {worst:.1e}"))
}

fn telemetry_hashes(root: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(root.join("runs")).unwrap() {
        let dir = entry.unwrap().path();
        let bytes = fs::read(dir.join("telemetry.csv")).unwrap();
        let hash: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        out.insert(dir.file_name().unwrap().to_string_lossy().into_owned(), hash);
    }
    out
}

fn c10_determinism() -> Outcome {
    let mut hashes = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let path = dir.path().join("exp.toml");
        fs::write(
            &path,
            "seed = 11\noutput_dir = \"out\"\n[dictionary]\nexcitations = 64\nt1_steps = 20\nt2_steps = 20\n\
             [phantom]\nheight = 16\nwidth = 16\n[sampling]\nratios = [4, 8]\nnoise_level = 0.01\n\
             [solver]\nmax_iters = 15\n",
        )
        .unwrap();
        let cfg = ExperimentConfig::load(&path).map_err(|e| e.to_string())?;
        harness::gen_dict(&cfg).map_err(|e| e.to_string())?;
        harness::build_tree(&cfg).map_err(|e| e.to_string())?;
        harness::gen_phantom(&cfg).map_err(|e| e.to_string())?;
        let rows = harness::run_sweep(&cfg).map_err(|e| e.to_string())?;
        ensure(rows.len() == 30, || format!("{} sweep rows", rows.len()))?;
        hashes.push(telemetry_hashes(&cfg.output_dir));
    }
    ensure(hashes[0].len() == 30, || format!("{} telemetry files", hashes[0].len()))?;
    ensure(hashes[0] == hashes[1], || "telemetry hashes differ".into())?;
    Ok("30 telemetry files identical across two sweeps".into())
}

fn main() -> ExitCode {
    let inst = dense_instance();
    let criteria: Vec<Criterion> = vec![
        ("1 cover tree invariants", Box::new(c1_invariants)),
        ("2 multiplicative ANN guarantee", Box::new(c2_multiplicative)),
        ("3 additive guarantee", Box::new(c3_additive)),
        ("4 sublinear search cost", Box::new(c4_sublinear)),
        ("5 adjoint identity", Box::new(c5_adjoint)),
        ("6 exact IPG bound", Box::new(|| c6_exact_bound(&inst))),
        ("7 geometric tolerance rate", Box::new(|| c7_geometric(&inst))),
        ("8 end-to-end desk MRF", Box::new(c8_end_to_end)),
        ("9 fingerprint oracle", Box::new(c9_bloch)),
        ("10 sweep determinism", Box::new(c10_determinism)),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
