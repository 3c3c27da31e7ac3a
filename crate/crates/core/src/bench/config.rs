use serde::{Deserialize, Serialize};

use crate::lsm::LsmConfig;
use crate::process::{alternating_beta, check_stationarity, AmnarParams, EnarParams};
use crate::{Error, Result};

/// Network population used to draw the graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorKind {
    Dcsbm,
    Dcmmsbm,
    Rdpg,
    /// Logistic latent space model; the only generator with an `[Q | v]` truth.
    Lsm,
}

impl GeneratorKind {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Dcsbm => "dcsbm",
            GeneratorKind::Dcmmsbm => "dcmmsbm",
            GeneratorKind::Rdpg => "rdpg",
            GeneratorKind::Lsm => "lsm",
        }
    }
}

/// Response model, used both for the truth and for the fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Nar,
    Enar,
    Amnar,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Nar => "nar",
            ModelKind::Enar => "enar",
            ModelKind::Amnar => "amnar",
        }
    }
}

/// Sparsity `ρ_N`; the maximum expected degree of block models is `N ρ_N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoRule {
    /// `ρ_N = N^{-1/2}`.
    InvSqrt,
    Fixed(f64),
}

impl RhoRule {
    pub fn rho(self, n: usize) -> f64 {
        match self {
            RhoRule::InvSqrt => 1.0 / (n as f64).sqrt(),
            RhoRule::Fixed(r) => r,
        }
    }
}

/// A Monte Carlo experiment: every combination of the grid lists, `reps`
/// replications each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub n: Vec<usize>,
    pub t: Vec<usize>,
    pub k: Vec<usize>,
    pub generators: Vec<GeneratorKind>,
    pub truth_models: Vec<ModelKind>,
    pub fit_models: Vec<ModelKind>,
    pub reps: usize,
    pub base_seed: u64,
    pub alpha: f64,
    pub theta: f64,
    pub gamma: Vec<f64>,
    pub sigma: f64,
    pub covariate_variances: Vec<f64>,
    /// AMNAR rate exponent `s`.
    pub s: f64,
    /// Block matrix `2q I + q 11'`.
    pub q_block: f64,
    pub rho_rule: RhoRule,
    /// Standard deviation of planted latent space factors.
    pub lsm_scale: f64,
    /// Mean of planted additive effects.
    pub lsm_offset: f64,
    /// Redraw graphs with isolated nodes instead of keeping them.
    pub resample_isolated: bool,
    /// Fit with the true latent regressors instead of estimated ones.
    pub oracle_latent: bool,
    /// Record wall-clock time; off gives byte-reproducible output.
    pub timing: bool,
    pub lsm: LsmConfig,
}

impl Default for ExperimentConfig {
    /// The full simulation grid with 200 replications.
    fn default() -> Self {
        ExperimentConfig {
            n: vec![40, 80, 160, 320],
            t: vec![2, 40, 160, 320],
            k: vec![3, 12],
            generators: vec![GeneratorKind::Dcmmsbm, GeneratorKind::Dcsbm],
            truth_models: vec![ModelKind::Enar],
            fit_models: vec![ModelKind::Nar, ModelKind::Enar],
            reps: 200,
            base_seed: 1,
            alpha: 0.2,
            theta: 0.2,
            gamma: vec![1.0 / 3.0, -1.0 / 6.0, 0.0],
            sigma: 0.5,
            covariate_variances: vec![3.0, 2.0, 1.0],
            s: 0.25,
            q_block: 9.0 / 40.0,
            rho_rule: RhoRule::InvSqrt,
            lsm_scale: 1.0,
            lsm_offset: -1.0,
            resample_isolated: false,
            oracle_latent: false,
            timing: true,
            lsm: LsmConfig::default(),
        }
    }
}

impl ExperimentConfig {
    /// Small grid for quick checks: `N ∈ {40, 80}`, `T ∈ {2, 40}`, `K = 3`,
    /// 10 replications, DCMMSBM, ENAR truth, NAR and ENAR fits.
    pub fn smoke() -> Self {
        ExperimentConfig {
            n: vec![40, 80],
            t: vec![2, 40],
            k: vec![3],
            generators: vec![GeneratorKind::Dcmmsbm],
            reps: 10,
            ..ExperimentConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if self.reps == 0 {
            return bad("reps must be at least 1");
        }
        if [&self.n, &self.t, &self.k].iter().any(|v| v.is_empty() || v.contains(&0)) {
            return bad("grid lists must be nonempty and positive");
        }
        if self.generators.is_empty() || self.truth_models.is_empty() || self.fit_models.is_empty() {
            return bad("generators, truth_models and fit_models must be nonempty");
        }
        if !(self.q_block > 0.0 && self.q_block <= 1.0 / 3.0) {
            return bad("q_block must lie in (0, 1/3]");
        }
        if let RhoRule::Fixed(r) = self.rho_rule {
            if !(r > 0.0 && r <= 1.0) {
                return bad("fixed rho must lie in (0, 1]");
            }
        }
        if !check_stationarity(self.alpha, self.theta) {
            return Err(Error::NotStationary(self.alpha.abs() + self.theta.abs()));
        }
        if !(self.sigma >= 0.0) {
            return bad("sigma must be nonnegative");
        }
        if self.gamma.len() != self.covariate_variances.len() {
            return bad("gamma and covariate_variances must have equal length");
        }
        crate::process::CovariateSpec::new(self.covariate_variances.clone())?;
        crate::process::validate_rate(self.s)?;
        self.lsm.validate()?;
        if self.truth_models.contains(&ModelKind::Amnar) && self.generators.iter().any(|&g| g != GeneratorKind::Lsm) {
            return bad("AMNAR truth requires the lsm generator");
        }
        let n_min = *self.n.iter().min().unwrap_or(&0);
        if self.k.iter().any(|&k| k >= n_min) {
            return bad("every K must be smaller than every N");
        }
        Ok(())
    }

    pub fn enar_params(&self, k: usize) -> EnarParams {
        EnarParams {
            alpha: self.alpha,
            theta: self.theta,
            beta: alternating_beta(k),
            gamma: self.gamma.clone(),
            sigma: self.sigma,
        }
    }

    pub fn amnar_params(&self, k: usize) -> AmnarParams {
        let full = alternating_beta(k + 1);
        AmnarParams {
            alpha: self.alpha,
            theta: self.theta,
            beta1: full[..k].to_vec(),
            beta2: full[k],
            gamma: self.gamma.clone(),
            sigma: self.sigma,
            s: self.s,
        }
    }
}
