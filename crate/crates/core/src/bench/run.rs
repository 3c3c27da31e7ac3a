use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, GeneratorKind, ModelKind};
use crate::estimate::{
    fit_model, fit_with_latent, forecast_error, predict_one_step, rel_error, DesignSpec, FitOptions, ModelFit,
};
use crate::lsm::{planted_lsm, sample_lsm_graph};
use crate::network::{
    assortative_block_matrix, draw_dcmmsbm, draw_dcsbm, draw_rdpg, normalized_laplacian, procrustes_align,
    spectral_embed_with, EigenConfig, Graph, IsolatedPolicy, Laplacian,
};
use crate::process::{simulate, CovariateSpec, Dynamics, Init, Panel};
use crate::{Error, Result};

/// One data-generating setting of the grid. Every fit model is applied to
/// the same simulated data of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Cell {
    pub gen: GeneratorKind,
    pub truth: ModelKind,
    pub n: usize,
    pub t: usize,
    pub k: usize,
}

/// All cells in canonical order: generator, truth, `N`, `T`, `K`, each in
/// the order listed in the config.
pub fn cells(config: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for &gen in &config.generators {
        for &truth in &config.truth_models {
            for &n in &config.n {
                for &t in &config.t {
                    for &k in &config.k {
                        out.push(Cell { gen, truth, n, t, k });
                    }
                }
            }
        }
    }
    out
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Replication seed: splitmix64 chained over the base seed, the cell
/// fields and the replication index.
pub fn derive_seed(base_seed: u64, cell: &Cell, rep: usize) -> u64 {
    let words = [
        cell.gen as u64,
        cell.truth as u64,
        cell.n as u64,
        cell.t as u64,
        cell.k as u64,
        rep as u64,
    ];
    words.iter().fold(splitmix(base_seed), |h, &w| splitmix(h ^ w))
}

/// One row of the results table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationResult {
    pub gen: &'static str,
    pub truth: &'static str,
    pub fit: &'static str,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "T")]
    pub t: usize,
    #[serde(rename = "K")]
    pub k: usize,
    pub rep: usize,
    pub seed: u64,
    pub alpha_hat: f64,
    pub theta_hat: f64,
    pub rmse_alpha: f64,
    pub rmse_theta: f64,
    /// `‖β̂ - H'β‖ / ‖β‖` after Procrustes alignment; NaN when the fitted
    /// latent regressors do not correspond to the truth.
    pub rmse_beta: f64,
    pub rmsp: f64,
    pub sigma2_hat: f64,
    pub aic: f64,
    pub bic: f64,
    /// `ok` or the error kind.
    pub status: String,
    pub wall_ms: u64,
    #[serde(skip)]
    pub theta_se: f64,
}

impl ReplicationResult {
    fn blank(cell: &Cell, fit: ModelKind, rep: usize, seed: u64, status: String) -> Self {
        ReplicationResult {
            gen: cell.gen.name(),
            truth: cell.truth.name(),
            fit: fit.name(),
            n: cell.n,
            t: cell.t,
            k: cell.k,
            rep,
            seed,
            alpha_hat: f64::NAN,
            theta_hat: f64::NAN,
            rmse_alpha: f64::NAN,
            rmse_theta: f64::NAN,
            rmse_beta: f64::NAN,
            rmsp: f64::NAN,
            sigma2_hat: f64::NAN,
            aic: f64::NAN,
            bic: f64::NAN,
            status,
            wall_ms: 0,
            theta_se: f64::NAN,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

/// Simulated data of one replication.
pub struct Truth {
    pub graph: Graph,
    pub lap: Laplacian,
    /// True latent regressors: `U` (ENAR), `[Q | v]` (AMNAR), none (NAR).
    pub latent: DMatrix<f64>,
    pub beta: Vec<f64>,
    pub dynamics: Dynamics,
    /// `T + 1` transitions; the last one is held out for prediction.
    pub panel: Panel,
}

/// Draws the graph, the latent truth and a panel with one extra transition.
pub fn simulate_truth(cell: &Cell, config: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<Truth> {
    let policy = if config.resample_isolated {
        IsolatedPolicy::default()
    } else {
        IsolatedPolicy::Allow
    };
    let (n, k) = (cell.n, cell.k);
    let rho = config.rho_rule.rho(n);
    let eig = EigenConfig::default();
    let (graph, population_u, planted) = match cell.gen {
        GeneratorKind::Lsm => {
            let state = planted_lsm(n, k, config.lsm_scale, config.lsm_offset, rng);
            let (graph, _) = sample_lsm_graph(&state, policy, rng)?;
            let u = if cell.truth == ModelKind::Enar {
                let mut p = state.chi();
                p.apply(|x| *x = 1.0 / (1.0 + (-*x).exp()));
                p.fill_diagonal(0.0);
                Some(spectral_embed_with(&p, k, &eig)?.vectors)
            } else {
                None
            };
            (graph, u, Some(state))
        }
        gen => {
            let spec = match gen {
                GeneratorKind::Dcsbm => draw_dcsbm(n, assortative_block_matrix(k, config.q_block), n as f64 * rho, rng),
                GeneratorKind::Dcmmsbm => {
                    draw_dcmmsbm(n, assortative_block_matrix(k, config.q_block), n as f64 * rho, rng)
                }
                _ => draw_rdpg(n, k, rho, rng),
            };
            let generated = spec.generate(policy, rng)?;
            let u = if cell.truth == ModelKind::Enar {
                Some(spectral_embed_with(&generated.connection.p, k, &eig)?.vectors)
            } else {
                None
            };
            (generated.graph, u, None)
        }
    };
    let lap = normalized_laplacian(&graph, !config.resample_isolated)?;
    let (latent, beta, dynamics) = match cell.truth {
        ModelKind::Nar => {
            let params = config.enar_params(0);
            let latent = DMatrix::zeros(n, 0);
            let d = Dynamics::enar(&params, &latent)?;
            (latent, Vec::new(), d)
        }
        ModelKind::Enar => {
            let params = config.enar_params(k);
            let u = population_u.expect("population eigenvectors for ENAR truth");
            let d = Dynamics::enar(&params, &u)?;
            (u, params.beta, d)
        }
        ModelKind::Amnar => {
            let params = config.amnar_params(k);
            let state = planted.ok_or_else(|| Error::InvalidArgument("AMNAR truth requires the lsm generator".into()))?;
            let x = state.to_matrix();
            let d = Dynamics::amnar(&params, &x, cell.t)?;
            (x, params.beta(), d)
        }
    };
    let cov = CovariateSpec::new(config.covariate_variances.clone())?;
    let panel = simulate(&dynamics, &lap, &cov, cell.t + 1, &Init::Stationary, rng)?;
    Ok(Truth {
        graph,
        lap,
        latent,
        beta,
        dynamics,
        panel,
    })
}

fn design_for(fit: ModelKind, cell: &Cell, config: &ExperimentConfig) -> DesignSpec {
    match fit {
        ModelKind::Nar => DesignSpec::Nar,
        ModelKind::Enar => DesignSpec::Enar { k: cell.k },
        ModelKind::Amnar => DesignSpec::Amnar { k: cell.k, s: config.s },
    }
}

fn beta_error(fit: ModelKind, cell: &Cell, truth: &Truth, model: &ModelFit) -> Result<f64> {
    if fit != cell.truth || fit == ModelKind::Nar {
        return Ok(f64::NAN);
    }
    let k = cell.k;
    let beta = DVector::from_column_slice(&truth.beta);
    let beta_hat = model.beta();
    let target = match fit {
        ModelKind::Enar => {
            let h = procrustes_align(&model.latent, &truth.latent)?.h;
            h.transpose() * &beta
        }
        _ => {
            let q_hat = model.latent.columns(0, k).into_owned();
            let q = truth.latent.columns(0, k).into_owned();
            let h = procrustes_align(&q_hat, &q)?.h;
            let mut t = beta.clone();
            t.rows_mut(0, k).copy_from(&(h.transpose() * beta.rows(0, k)));
            t
        }
    };
    let denom = beta.norm();
    if denom == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok((beta_hat - target).norm() / denom)
}

fn score(
    fit: ModelKind,
    cell: &Cell,
    config: &ExperimentConfig,
    truth: &Truth,
    out: &mut ReplicationResult,
) -> Result<()> {
    let spec = design_for(fit, cell, config);
    let train = truth.panel.window(0, cell.t)?;
    let opts = FitOptions {
        allow_isolated: !config.resample_isolated,
        lsm: config.lsm.clone(),
        ..FitOptions::default()
    };
    let model = if config.oracle_latent && fit == cell.truth {
        fit_with_latent(&train, &truth.lap, &truth.latent, &spec)?
    } else {
        fit_model(&train, &truth.graph, &spec, &opts)?
    };
    let alpha_hat = model.coef("alpha").unwrap_or(f64::NAN);
    let theta_hat = model.coef("theta").unwrap_or(f64::NAN);
    out.alpha_hat = alpha_hat;
    out.theta_hat = theta_hat;
    out.rmse_alpha = rel_error(truth.dynamics.alpha, alpha_hat).unwrap_or(f64::NAN);
    out.rmse_theta = rel_error(truth.dynamics.theta, theta_hat).unwrap_or(f64::NAN);
    out.theta_se = model.index("theta").map_or(f64::NAN, |i| model.fit.se()[i]);
    out.rmse_beta = beta_error(fit, cell, truth, &model)?;
    let origin = cell.t;
    let y_t = truth.panel.y_at(origin);
    let z_t = &truth.panel.z()[origin];
    let mean = truth.dynamics.mean_step(&truth.lap, &y_t, z_t);
    let y_hat = predict_one_step(&model, &truth.lap, &y_t, z_t)?;
    out.rmsp = forecast_error(&y_hat, &mean)?;
    out.sigma2_hat = model.fit.sigma2_hat;
    out.aic = model.fit.aic;
    out.bic = model.fit.bic;
    Ok(())
}

/// Runs one replication of `cell` and scores every fit model of the config,
/// in config order. Failures are recorded in `status`, never propagated.
pub fn run_replication(cell: &Cell, rep: usize, config: &ExperimentConfig) -> Vec<ReplicationResult> {
    let seed = derive_seed(config.base_seed, cell, rep);
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = simulate_truth(cell, config, &mut rng);
    let data_ms = start.elapsed().as_millis() as u64;
    config
        .fit_models
        .iter()
        .map(|&fit| {
            let truth = match &truth {
                Ok(t) => t,
                Err(e) => return ReplicationResult::blank(cell, fit, rep, seed, e.kind().to_string()),
            };
            let fit_start = Instant::now();
            let mut row = ReplicationResult::blank(cell, fit, rep, seed, "ok".into());
            if let Err(e) = score(fit, cell, config, truth, &mut row) {
                row = ReplicationResult::blank(cell, fit, rep, seed, e.kind().to_string());
            }
            if config.timing {
                row.wall_ms = data_ms + fit_start.elapsed().as_millis() as u64;
            }
            row
        })
        .collect()
}

/// Runs every cell and replication on a pool of `parallelism` threads.
/// Rows come back sorted by cell (canonical order), replication and fit.
pub fn run_grid(config: &ExperimentConfig, parallelism: usize) -> Result<Vec<ReplicationResult>> {
    config.validate()?;
    let cells = cells(config);
    let tasks: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..config.reps).map(move |r| (c, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?;
    let mut keyed: Vec<((usize, usize), Vec<ReplicationResult>)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(c, r)| ((c, r), run_replication(&cells[c], r, config)))
            .collect()
    });
    keyed.sort_by_key(|(key, _)| *key);
    let failures = keyed.iter().flat_map(|(_, rows)| rows).filter(|r| !r.is_ok()).count();
    if failures > 0 {
        log::warn!("{failures} replication fits failed");
    }
    Ok(keyed.into_iter().flat_map(|(_, rows)| rows).collect())
}

fn fmt(v: f64) -> String {
    format!("{v:?}")
}

/// Results table as CSV text with the stable column order.
pub fn results_csv(rows: &[ReplicationResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let enc = |e: csv::Error| Error::InvalidArgument(format!("csv encoding failed: {e}"));
    w.write_record(RESULT_COLUMNS).map_err(enc)?;
    for r in rows {
        w.write_record([
            r.gen.to_string(),
            r.truth.to_string(),
            r.fit.to_string(),
            r.n.to_string(),
            r.t.to_string(),
            r.k.to_string(),
            r.rep.to_string(),
            r.seed.to_string(),
            fmt(r.alpha_hat),
            fmt(r.theta_hat),
            fmt(r.rmse_alpha),
            fmt(r.rmse_theta),
            fmt(r.rmse_beta),
            fmt(r.rmsp),
            fmt(r.sigma2_hat),
            fmt(r.aic),
            fmt(r.bic),
            r.status.clone(),
            r.wall_ms.to_string(),
        ])
        .map_err(enc)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::InvalidArgument(format!("csv encoding failed: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Column names of [`results_csv`].
pub const RESULT_COLUMNS: [&str; 19] = [
    "gen", "truth", "fit", "N", "T", "K", "rep", "seed", "alpha_hat", "theta_hat", "rmse_alpha", "rmse_theta",
    "rmse_beta", "rmsp", "sigma2_hat", "aic", "bic", "status", "wall_ms",
];
