//! Single runs, the sweep grid and the report table.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use cover_ipg::covertree::CoverTree;
use cover_ipg::model::{Dictionary, TissueParams};
use cover_ipg::mrf::{synthesize_phantom, Phantom, SynthesizedPhantom};
use cover_ipg::operators::{add_noise, EpiOperator, EpiPattern, LinearOperator};
use cover_ipg::scalar;
use cover_ipg::solver::{
    ipg_run, EpsilonSchedule, GroundTruth, IterationRecord, RunOutput, SolverConfig, StopReason, Strategy,
    ToleranceKind,
};
use serde::{Deserialize, Serialize};

use crate::artifacts::{self, Layout};
use crate::config::{ExperimentConfig, Method};
use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Loaded artifacts plus the synthesized ground truth.
pub struct Workspace {
    pub config: ExperimentConfig,
    pub layout: Layout,
    pub dict: Dictionary<f64>,
    pub tree: Option<CoverTree<f64>>,
    pub phantom: Phantom,
    pub truth: SynthesizedPhantom<f64>,
    pub tissue: Vec<Option<TissueParams>>,
}

impl Workspace {
    /// Reads dictionary, phantom and (when `with_tree`) the tree from the
    /// config's output directory.
    pub fn load(config: ExperimentConfig, with_tree: bool) -> Result<Self> {
        let layout = Layout::new(&config.output_dir);
        let dict = artifacts::load_dictionary(&layout.dictionary())?;
        let tree = if with_tree {
            Some(artifacts::load_tree(&layout.tree(), &dict)?)
        } else {
            None
        };
        let phantom = artifacts::load_phantom(&layout.phantom())?;
        Self::from_parts(config, dict, tree, phantom)
    }

    pub fn from_parts(
        config: ExperimentConfig,
        dict: Dictionary<f64>,
        tree: Option<CoverTree<f64>>,
        phantom: Phantom,
    ) -> Result<Self> {
        let truth = synthesize_phantom(&phantom, &dict)?;
        let tissue = phantom.tissue_params();
        Ok(Self {
            layout: Layout::new(&config.output_dir),
            config,
            dict,
            tree,
            phantom,
            truth,
            tissue,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSpec {
    pub method: Method,
    pub epsilon: f64,
    pub ratio: usize,
}

impl RunSpec {
    pub fn label(&self) -> String {
        format!("{}_eps{}_r{}", self.method, self.epsilon, self.ratio)
    }

    /// The run that actually has to be computed; exact methods ignore
    /// `epsilon` and a zero-tolerance tree search is the exact tree search.
    fn canonical(&self) -> (Method, u64, usize) {
        match self.method {
            Method::BruteExact => (Method::BruteExact, 0, self.ratio),
            Method::TreeExact => (Method::TreeExact, 0, self.ratio),
            Method::TreeAnn if self.epsilon == 0.0 => (Method::TreeExact, 0, self.ratio),
            Method::TreeAnn => (Method::TreeAnn, self.epsilon.to_bits(), self.ratio),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverEcho {
    pub max_iters: usize,
    pub tolerance: f64,
    pub step_size: f64,
    pub audit_fraction: f64,
    pub seed: u64,
    pub noise_level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub method: Method,
    pub epsilon: f64,
    pub ratio: usize,
    pub iterations: usize,
    pub converged: bool,
    /// `|x_hat - x0| / |x0|`
    pub final_mse: f64,
    pub t1_mae: f64,
    pub t2_mae: f64,
    pub cum_distances: u64,
    pub wall_time_s: f64,
    pub solver: SolverEcho,
}

pub struct RunResult {
    pub spec: RunSpec,
    pub output: RunOutput<f64>,
    pub summary: RunSummary,
}

fn strategy(spec: &RunSpec) -> Strategy {
    match spec.method {
        Method::BruteExact => Strategy::Brute,
        Method::TreeExact => Strategy::tree_exact(),
        Method::TreeAnn => Strategy::Tree {
            kind: ToleranceKind::Multiplicative,
            schedule: EpsilonSchedule::Constant(spec.epsilon),
        },
    }
}

/// Samples the ground truth with the EPI pattern of `spec.ratio` and runs
/// the solver.
pub fn execute(ws: &Workspace, spec: RunSpec) -> Result<RunResult> {
    let cfg = &ws.config;
    let pattern = EpiPattern::lattice(
        ws.phantom.height(),
        ws.phantom.width(),
        ws.dict.dim(),
        spec.ratio,
        cfg.sampling.shift.into(),
    )?;
    let op = EpiOperator::<f64>::new(pattern);
    let clean = op.apply(ws.truth.image.as_slice())?;
    let noise = cfg.sampling.noise_level * scalar::norm(&clean);
    let y = add_noise(&clean, noise, cfg.seed ^ spec.ratio as u64);

    let tree = if spec.method.needs_tree() {
        Some(ws.tree.as_ref().ok_or_else(|| HarnessError::MissingArtifact {
            path: ws.layout.tree(),
            hint: "build-tree",
        })?)
    } else {
        None
    };
    let solver = SolverConfig {
        step_size: cfg.solver.step_size,
        max_iters: cfg.solver.max_iters,
        tolerance: cfg.solver.tolerance,
        strategy: strategy(&spec),
        seed: cfg.seed,
        audit_fraction: cfg.solver.audit_fraction,
    };
    let truth = GroundTruth {
        image: &ws.truth.image,
        params: Some(&ws.tissue),
    };
    let start = Instant::now();
    let output = ipg_run(&op, &ws.dict, tree, &y, &solver, Some(truth))?;
    let wall = start.elapsed().as_secs_f64();

    let last = output.records.last().expect("record 0 always present");
    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        method: spec.method,
        epsilon: spec.epsilon,
        ratio: spec.ratio,
        iterations: last.iter,
        converged: matches!(output.stop, StopReason::Converged(_)),
        final_mse: last.relative_error.unwrap_or(f64::NAN),
        t1_mae: last.t1_mae.unwrap_or(f64::NAN),
        t2_mae: last.t2_mae.unwrap_or(f64::NAN),
        cum_distances: last.distances_cum,
        wall_time_s: wall,
        solver: SolverEcho {
            max_iters: solver.max_iters,
            tolerance: solver.tolerance,
            step_size: output.step_size,
            audit_fraction: solver.audit_fraction,
            seed: solver.seed,
            noise_level: cfg.sampling.noise_level,
        },
    };
    Ok(RunResult { spec, output, summary })
}

#[derive(Debug, Serialize)]
struct TelemetryRow {
    iter: usize,
    objective: f64,
    rel_solution_mse: Option<f64>,
    t1_mae: Option<f64>,
    t2_mae: Option<f64>,
    epsilon_t: f64,
    distances_iter: u64,
    distances_cum: u64,
}

pub fn write_telemetry(path: &Path, records: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(artifacts::create(path)?);
    for r in records {
        w.serialize(TelemetryRow {
            iter: r.iter,
            objective: r.objective,
            rel_solution_mse: r.relative_error,
            t1_mae: r.t1_mae,
            t2_mae: r.t2_mae,
            epsilon_t: r.epsilon,
            distances_iter: r.distances_iter,
            distances_cum: r.distances_cum,
        })?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

/// Writes `telemetry.csv` and `summary.json` under `runs/<label>/`.
pub fn write_run(layout: &Layout, label: &str, records: &[IterationRecord], summary: &RunSummary) -> Result<()> {
    let dir = layout.run_dir(label);
    write_telemetry(&dir.join("telemetry.csv"), records)?;
    let path = dir.join("summary.json");
    let mut w = artifacts::create(&path)?;
    serde_json::to_writer_pretty(&mut w, summary)?;
    std::io::Write::write_all(&mut w, b"\n").map_err(|e| HarnessError::io(&path, e))?;
    std::io::Write::flush(&mut w).map_err(|e| HarnessError::io(&path, e))?;
    Ok(())
}

/// Every `(epsilon, method, ratio)` combination of the config, epsilon
/// outermost.
pub fn sweep_grid(cfg: &ExperimentConfig) -> Vec<RunSpec> {
    let mut grid = Vec::new();
    for &epsilon in &cfg.solver.epsilons {
        for &method in &cfg.solver.methods {
            for &ratio in &cfg.sampling.ratios {
                grid.push(RunSpec { method, epsilon, ratio });
            }
        }
    }
    grid
}

/// Runs the whole grid, computing each distinct run once, and writes every
/// row's run directory plus `sweep.csv`.
pub fn sweep(ws: &Workspace) -> Result<Vec<RunSummary>> {
    let mut cache: BTreeMap<(Method, u64, usize), RunResult> = BTreeMap::new();
    let mut rows = Vec::new();
    for spec in sweep_grid(&ws.config) {
        let key = spec.canonical();
        let done = match cache.entry(key) {
            Entry::Occupied(e) => e.into_mut(),
            Entry::Vacant(e) => {
                let canon = RunSpec {
                    method: key.0,
                    epsilon: f64::from_bits(key.1),
                    ratio: key.2,
                };
                e.insert(execute(ws, canon)?)
            }
        };
        let mut summary = done.summary.clone();
        summary.method = spec.method;
        summary.epsilon = spec.epsilon;
        write_run(&ws.layout, &spec.label(), &done.output.records, &summary)?;
        rows.push(summary);
    }
    write_table(
        &ws.layout.sweep_table(),
        &rows.iter().map(ReportRow::from).collect::<Vec<_>>(),
    )?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub epsilon: f64,
    pub ratio: usize,
    pub final_mse: f64,
    pub t1_mae: f64,
    pub t2_mae: f64,
    pub cum_distances: u64,
}

impl From<&RunSummary> for ReportRow {
    fn from(s: &RunSummary) -> Self {
        Self {
            method: s.method,
            epsilon: s.epsilon,
            ratio: s.ratio,
            final_mse: s.final_mse,
            t1_mae: s.t1_mae,
            t2_mae: s.t2_mae,
            cum_distances: s.cum_distances,
        }
    }
}

/// Accuracy against projection cost, sorted by cumulative distances.
pub fn report_table(summaries: &[RunSummary]) -> Vec<ReportRow> {
    let mut rows: Vec<ReportRow> = summaries.iter().map(ReportRow::from).collect();
    rows.sort_by(|a, b| {
        a.cum_distances
            .cmp(&b.cum_distances)
            .then(a.method.cmp(&b.method))
            .then(a.ratio.cmp(&b.ratio))
            .then(a.epsilon.total_cmp(&b.epsilon))
    });
    rows
}

pub fn write_table(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(artifacts::create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

/// Collects every `runs/*/summary.json` and writes `report.csv` and
/// `report.json`.
pub fn report(layout: &Layout) -> Result<Vec<ReportRow>> {
    let runs = layout.runs();
    let entries = std::fs::read_dir(&runs).map_err(|_| HarnessError::MissingArtifact {
        path: runs.clone(),
        hint: "solve` or `sweep",
    })?;
    let mut dirs: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("summary.json").is_file())
        .collect();
    dirs.sort();
    let mut summaries = Vec::with_capacity(dirs.len());
    for d in dirs {
        let path = d.join("summary.json");
        let s: RunSummary = serde_json::from_reader(artifacts::open(&path, "solve")?)?;
        summaries.push(s);
    }
    let rows = report_table(&summaries);
    write_table(&layout.report_csv(), &rows)?;
    let path = layout.report_json();
    let mut w = artifacts::create(&path)?;
    serde_json::to_writer_pretty(
        &mut w,
        &serde_json::json!({ "schema_version": SCHEMA_VERSION, "rows": rows }),
    )?;
    std::io::Write::write_all(&mut w, b"\n").map_err(|e| HarnessError::io(&path, e))?;
    std::io::Write::flush(&mut w).map_err(|e| HarnessError::io(&path, e))?;
    Ok(rows)
}
