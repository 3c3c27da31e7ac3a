//! Reproducible Monte Carlo grids over network generators, true models and
//! fitted models.

mod config;
mod run;
mod summary;

pub use config::{ExperimentConfig, GeneratorKind, ModelKind, RhoRule};
pub use run::{
    cells, derive_seed, results_csv, run_grid, run_replication, simulate_truth, Cell, ReplicationResult, Truth,
    RESULT_COLUMNS,
};
pub use summary::{median, quantile_sorted, summarize, summary_csv, GroupKey, SummaryRow, METRICS};
