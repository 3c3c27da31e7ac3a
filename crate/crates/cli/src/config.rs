//! The JSON run configuration shared by every subcommand.

use std::path::{Path, PathBuf};

use enarkit::bench::{ExperimentConfig, GeneratorKind, ModelKind};
use enarkit::estimate::DesignSpec;
use enarkit::lsm::LsmConfig;
use serde::{Deserialize, Serialize};

/// Run configuration. Every section and field is optional; command-line
/// flags take precedence over values read from the file.
///
/// ```json
/// {
///   "experiment": { "reps": 50, "n": [80], "t": [40] },
///   "simulate": { "gen": "dcmmsbm", "model": "enar", "n": 80, "t": 40, "k": 3 },
///   "design": { "model": "enar", "k": 3 },
///   "lsm": { "max_iters": 500 },
///   "paths": { "edges": "edges.csv", "panel": "panel.csv" }
/// }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Model parameters for `simulate` and the full grid for `mc`.
    pub experiment: ExperimentConfig,
    pub simulate: SimulateSection,
    /// Model fitted by `fit` and the rolling mode of `predict`.
    pub design: Option<DesignSpec>,
    /// Latent space fit settings for AMNAR models.
    pub lsm: LsmConfig,
    pub paths: Paths,
}

/// The single data set drawn by `simulate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    /// Default `dcmmsbm`.
    pub gen: GeneratorKind,
    /// Default `enar`.
    pub model: ModelKind,
    /// Default 80.
    pub n: usize,
    /// Number of transitions; default 40.
    pub t: usize,
    /// Default 3.
    pub k: usize,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            gen: GeneratorKind::Dcmmsbm,
            model: ModelKind::Enar,
            n: 80,
            t: 40,
            k: 3,
        }
    }
}

/// Input and output files.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub edges: Option<PathBuf>,
    pub panel: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub fit: Option<PathBuf>,
    pub latent: Option<PathBuf>,
    pub forecast: Option<PathBuf>,
    pub results: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> enarkit::Result<Self> {
        let config: RunConfig = match path {
            Some(p) => enarkit::io::read_json(p)?,
            None => RunConfig::default(),
        };
        config.lsm.validate()?;
        if let Some(spec) = &config.design {
            spec.validate()?;
        }
        Ok(config)
    }
}
