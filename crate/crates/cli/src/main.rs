//! `enarkit` command-line interface.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
//! Errors are reported on stderr as one JSON object
//! `{"error": kind, "message": text, "exit_code": code}`.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use commands::CliError;

#[derive(Debug, Parser)]
#[command(name = "enarkit", version, about = "Embedding network autoregression toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw a network and a panel; write edges CSV, panel CSV and truth JSON.
    Simulate(SimulateArgs),
    /// Fit a model to an edge list and a panel; write the fit JSON.
    Fit(FitArgs),
    /// One-step forecasts from a fitted model, or rolling refits.
    Predict(PredictArgs),
    /// Choose the embedding dimension by edge cross-validation.
    SelectK(SelectKArgs),
    /// Run a Monte Carlo grid; write results and summary CSVs.
    Mc(McArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON run configuration; flags override its values.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Network generator: dcsbm, dcmmsbm, rdpg or lsm [default: dcmmsbm].
    #[arg(long, value_parser = commands::parse_enum::<enarkit::bench::GeneratorKind>)]
    gen: Option<enarkit::bench::GeneratorKind>,
    /// True model: nar, enar or amnar (amnar needs --gen lsm) [default: enar].
    #[arg(long, value_parser = commands::parse_enum::<enarkit::bench::ModelKind>)]
    model: Option<enarkit::bench::ModelKind>,
    /// Number of nodes [default: 80].
    #[arg(long)]
    n: Option<usize>,
    /// Number of transitions; the panel holds y_0..y_T [default: 40].
    #[arg(long)]
    t: Option<usize>,
    /// Latent dimension / number of communities [default: 3].
    #[arg(long)]
    k: Option<usize>,
    /// Random seed [default: the config's experiment.base_seed, 1].
    #[arg(long, env = "ENARKIT_SEED")]
    seed: Option<u64>,
    /// Directory for edges.csv, panel.csv and truth.json unless paths are set.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    common: Common,
    /// Edge-list CSV with header src,dst.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Panel CSV with header node,t,y,z1..zp.
    #[arg(long)]
    panel: Option<PathBuf>,
    /// Model: nar, enar, amnar or enr [default: the config's design].
    #[arg(long)]
    model: Option<String>,
    /// Latent dimension (enar, amnar, enr only).
    #[arg(long)]
    k: Option<usize>,
    /// AMNAR rate exponent in (0, 1/2) [default: 0.25].
    #[arg(long)]
    s: Option<f64>,
    /// Include an intercept (enr only).
    #[arg(long)]
    intercept: bool,
    /// Accept isolated nodes instead of failing.
    #[arg(long)]
    allow_isolated: bool,
    /// Output fit JSON [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the AMNAR latent estimate as CSV node,v,q1..qK.
    #[arg(long)]
    latent_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    common: Common,
    /// Fit JSON written by `fit`.
    #[arg(long)]
    fit: Option<PathBuf>,
    /// Edge-list CSV the model was fitted on.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Panel CSV the model was fitted on.
    #[arg(long)]
    panel: Option<PathBuf>,
    /// Forecast y_{origin+1} from y_origin and z_origin [default: T - 1].
    #[arg(long, conflicts_with_all = ["window_len", "windows", "window_start"])]
    origin: Option<usize>,
    /// Rolling mode: transitions per refit window.
    #[arg(long)]
    window_len: Option<usize>,
    /// Rolling mode: number of windows, the last one ending at y_T.
    #[arg(long, conflicts_with = "window_start")]
    windows: Option<usize>,
    /// Rolling mode: first window start; windows run until y_T.
    #[arg(long)]
    window_start: Option<usize>,
    /// Accept isolated nodes instead of failing.
    #[arg(long)]
    allow_isolated: bool,
    /// Output CSV: node,y_hat, or start,node,y_hat,y in rolling mode.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelectKArgs {
    #[command(flatten)]
    common: Common,
    /// Edge-list CSV with header src,dst.
    #[arg(long)]
    edges: Option<PathBuf>,
    /// Node count [default: one more than the largest id].
    #[arg(long)]
    nodes: Option<usize>,
    /// Largest dimension considered.
    #[arg(long)]
    k_max: usize,
    /// Cross-validation folds.
    #[arg(long, default_value_t = 5)]
    folds: usize,
    /// Fraction of node pairs hidden per fold.
    #[arg(long, default_value_t = 0.1)]
    holdout: f64,
    /// Seed for the held-out pair draws.
    #[arg(long, env = "ENARKIT_SEED", default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    common: Common,
    /// Use the small smoke grid instead of the configured experiment.
    #[arg(long)]
    smoke: bool,
    /// Override the number of replications.
    #[arg(long)]
    reps: Option<usize>,
    /// Worker threads.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Base seed [default: the config's experiment.base_seed, 1].
    #[arg(long, env = "ENARKIT_SEED")]
    seed: Option<u64>,
    /// Leave wall_ms at 0 so results are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
    /// Summary grouping columns.
    #[arg(long, value_delimiter = ',', default_value = "gen,truth,fit,N,T,K")]
    group_by: Vec<String>,
    /// Directory for results.csv and summary.csv unless paths are set.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn report(err: &CliError) -> ExitCode {
    let code = err.exit_code();
    let body = json!({ "error": err.kind(), "message": err.to_string(), "exit_code": code });
    eprintln!("{body}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return report(&CliError::Usage(e.render().to_string().trim().to_string())),
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(&a),
        Command::Fit(a) => commands::fit(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::SelectK(a) => commands::select_k(&a),
        Command::Mc(a) => commands::mc(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
