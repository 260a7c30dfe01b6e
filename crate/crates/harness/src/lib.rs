//! Experiment runner behind the `cover-ipg` command line tool.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod experiment;

use cover_ipg::covertree::ValidationReport;
use cover_ipg::mrf::build_dictionary;

pub use config::{ExperimentConfig, Method};
pub use error::{HarnessError, Result};
pub use experiment::{execute, report, report_table, sweep, ReportRow, RunSpec, RunSummary, Workspace};

use artifacts::Layout;

/// `gen-dict`: simulates the dictionary of the configured grid.
pub fn gen_dict(cfg: &ExperimentConfig) -> Result<usize> {
    let dict = build_dictionary::<f64>(&cfg.sequence()?, &cfg.grid()?)?;
    artifacts::save_dictionary(&Layout::new(&cfg.output_dir).dictionary(), &dict)?;
    Ok(dict.len())
}

/// `build-tree`: cover tree over the unit-norm atoms.
pub fn build_tree(cfg: &ExperimentConfig) -> Result<(usize, i32)> {
    let layout = Layout::new(&cfg.output_dir);
    let dict = artifacts::load_dictionary(&layout.dictionary())?;
    let tree = dict.build_tree()?;
    artifacts::save_tree(&layout.tree(), &tree)?;
    Ok((tree.nodes().len(), tree.max_scale()))
}

/// `gen-phantom`: rasterizes the configured phantom.
pub fn gen_phantom(cfg: &ExperimentConfig) -> Result<usize> {
    let phantom = cfg.phantom(&cfg.grid()?)?;
    artifacts::save_phantom(&Layout::new(&cfg.output_dir).phantom(), &phantom)?;
    Ok(phantom.tissue_params().iter().filter(|p| p.is_some()).count())
}

/// `validate-tree`: all four structural checks on the stored tree.
pub fn validate_tree(cfg: &ExperimentConfig) -> Result<ValidationReport> {
    let layout = Layout::new(&cfg.output_dir);
    let dict = artifacts::load_dictionary(&layout.dictionary())?;
    let tree = artifacts::load_tree(&layout.tree(), &dict)?;
    let report = tree.validate();
    if report.all_passed() {
        Ok(report)
    } else {
        Err(HarnessError::Validation(report.to_string()))
    }
}

/// `solve`: the single run described by the `[solve]` section.
pub fn solve(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let spec = RunSpec {
        method: cfg.solve.method,
        epsilon: cfg.solve.epsilon,
        ratio: cfg.solve.ratio,
    };
    let ws = Workspace::load(cfg.clone(), spec.method.needs_tree())?;
    let run = execute(&ws, spec)?;
    experiment::write_run(&ws.layout, &spec.label(), &run.output.records, &run.summary)?;
    Ok(run.summary)
}

/// `sweep`: every `(epsilon, method, ratio)` combination.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<RunSummary>> {
    let with_tree = cfg.solver.methods.iter().any(|m| m.needs_tree());
    let ws = Workspace::load(cfg.clone(), with_tree)?;
    sweep(&ws)
}
