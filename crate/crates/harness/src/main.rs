use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cover_ipg_harness::{self as harness, ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(
    name = "cover-ipg",
    version,
    about = "Cover-tree accelerated projected gradient experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the fingerprint dictionary.
    GenDict(Args),
    /// Build the cover tree over the dictionary.
    BuildTree(Args),
    /// Rasterize the phantom.
    GenPhantom(Args),
    /// Run one reconstruction.
    Solve(Args),
    /// Run the epsilon x method x ratio grid.
    Sweep(Args),
    /// Check the stored tree's structural invariants.
    ValidateTree(Args),
    /// Aggregate run summaries into a table.
    Report(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let args = match &cli.command {
        Command::GenDict(a)
        | Command::BuildTree(a)
        | Command::GenPhantom(a)
        | Command::Solve(a)
        | Command::Sweep(a)
        | Command::ValidateTree(a)
        | Command::Report(a) => a,
    };
    let cfg = ExperimentConfig::load(&args.config)?;
    match cli.command {
        Command::GenDict(_) => {
            let d = harness::gen_dict(&cfg)?;
            println!("dictionary: {d} atoms");
        }
        Command::BuildTree(_) => {
            let (nodes, depth) = harness::build_tree(&cfg)?;
            println!("tree: {nodes} nodes, deepest scale {depth}");
        }
        Command::GenPhantom(_) => {
            let tissue = harness::gen_phantom(&cfg)?;
            println!("phantom: {tissue} tissue pixels");
        }
        Command::Solve(_) => {
            let s = harness::solve(&cfg)?;
            println!(
                "{} eps={} ratio={}: mse={:.4e} t1_mae={:.3} t2_mae={:.3} distances={} iters={}",
                s.method, s.epsilon, s.ratio, s.final_mse, s.t1_mae, s.t2_mae, s.cum_distances, s.iterations
            );
        }
        Command::Sweep(_) => {
            let rows = harness::run_sweep(&cfg)?;
            println!("sweep: {} rows", rows.len());
        }
        Command::ValidateTree(_) => {
            let report = harness::validate_tree(&cfg)?;
            print!("{report}");
        }
        Command::Report(_) => {
            let rows = harness::report(&harness::artifacts::Layout::new(&cfg.output_dir))?;
            println!("method,epsilon,ratio,final_mse,t1_mae,t2_mae,cum_distances");
            for r in rows {
                println!(
                    "{},{},{},{:.4e},{:.3},{:.3},{}",
                    r.method, r.epsilon, r.ratio, r.final_mse, r.t1_mae, r.t2_mae, r.cum_distances
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
