use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::design::{build_design, regressor_block, DesignSpec};
use super::ls::{fit_ls, FitResult};
use super::metrics::confint;
use crate::lsm::{fit_lsm, LsmConfig};
use crate::network::{normalized_laplacian, top_eigenpairs, EigenConfig, Graph, Laplacian};
use crate::process::Panel;
use crate::{Error, Result};

/// Settings shared by the model-level fitting functions.
#[derive(Debug, Clone, Default)]
pub struct FitOptions {
    /// Accept isolated nodes (zero rows of `L`) instead of failing.
    pub allow_isolated: bool,
    pub eigen: EigenConfig,
    pub lsm: LsmConfig,
}

/// Summary of the latent space fit behind an AMNAR model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LsmDiagnostics {
    pub loglik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stalled: bool,
    pub centering: f64,
    pub orthogonality: f64,
    pub max_row_norm: f64,
}

/// Spectral and numerical health of a fit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Leading adjacency eigenvalues (by magnitude), `K + 1` when available.
    pub eigenvalues: Vec<f64>,
    /// `|λ_K| - |λ_{K+1}|`.
    pub eigengap: Option<f64>,
    /// `√(K N ρ̂) / eigengap` with `ρ̂` the edge density.
    pub kappa: Option<f64>,
    pub condition_number: f64,
    pub lsm: Option<LsmDiagnostics>,
}

/// A fitted model together with everything needed to forecast from it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFit {
    pub spec: DesignSpec,
    pub names: Vec<String>,
    pub fit: FitResult,
    /// Unscaled latent regressors (`Û`, `[Q̂ | v̂]` or none).
    pub latent: DMatrix<f64>,
    /// Multiplier applied to `latent` in the design.
    pub latent_scale: f64,
    pub diagnostics: Diagnostics,
}

impl ModelFit {
    pub fn index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coef(&self, name: &str) -> Option<f64> {
        self.index(name).map(|i| self.fit.mu_hat[i])
    }

    /// Latent-effect coefficients `β̂`.
    pub fn beta(&self) -> DVector<f64> {
        self.fit.mu_hat.rows(0, self.spec.latent_cols()).into_owned()
    }

    pub fn confint(&self, name: &str, level: f64) -> Result<(f64, f64)> {
        let i = self
            .index(name)
            .ok_or_else(|| Error::InvalidArgument(format!("no coefficient named {name}")))?;
        confint(&self.fit, i, level)
    }

    pub fn to_report(&self) -> FitReport {
        let named = |vals: &[f64]| -> Map<String, Value> {
            self.names
                .iter()
                .zip(vals)
                .map(|(n, &v)| (n.clone(), Value::from(v)))
                .collect()
        };
        FitReport {
            spec: self.spec,
            mu_hat: named(self.fit.mu_hat.as_slice()),
            se: named(&self.fit.se()),
            sigma2_hat: self.fit.sigma2_hat,
            rss: self.fit.rss,
            loglik: self.fit.loglik,
            aic: self.fit.aic,
            bic: self.fit.bic,
            n_obs: self.fit.n_obs,
            n_params: self.fit.n_params,
            beta_rotation_caveat: self.spec.latent_cols() > 0 && !matches!(self.spec, DesignSpec::Amnar { .. }),
            cov_hat: rows_of(&self.fit.cov_hat),
            latent_scale: self.latent_scale,
            latent: rows_of(&self.latent),
            diagnostics: self.diagnostics.clone(),
        }
    }

    pub fn from_report(report: &FitReport) -> Result<Self> {
        let d = report.n_params;
        let names: Vec<String> = report.mu_hat.keys().cloned().collect();
        if names.len() != d {
            return Err(Error::InvalidArgument(format!(
                "report lists {} coefficients but n_params = {d}",
                names.len()
            )));
        }
        let p = d
            .checked_sub(report.spec.n_params(0))
            .ok_or_else(|| Error::InvalidArgument("n_params too small for the model".into()))?;
        if report.spec.coef_names(p) != names {
            return Err(Error::InvalidArgument("coefficient names do not match the model".into()));
        }
        let mu: Vec<f64> = report
            .mu_hat
            .values()
            .map(|v| v.as_f64().ok_or_else(|| Error::InvalidArgument("non-numeric coefficient".into())))
            .collect::<Result<_>>()?;
        let cov_hat = matrix_from_rows(&report.cov_hat, d)?;
        let latent = matrix_from_rows(&report.latent, report.spec.latent_cols())?;
        Ok(ModelFit {
            spec: report.spec,
            names,
            fit: FitResult {
                mu_hat: DVector::from_vec(mu),
                sigma2_hat: report.sigma2_hat,
                cov_hat,
                rss: report.rss,
                n_obs: report.n_obs,
                n_params: d,
                loglik: report.loglik,
                aic: report.aic,
                bic: report.bic,
                condition_number: report.diagnostics.condition_number,
            },
            latent,
            latent_scale: report.latent_scale,
            diagnostics: report.diagnostics.clone(),
        })
    }
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], ncols: usize) -> Result<DMatrix<f64>> {
    if let Some(i) = rows.iter().position(|r| r.len() != ncols) {
        return Err(Error::DimensionMismatch(format!("row {i} has {} entries, expected {ncols}", rows[i].len())));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.iter().flatten().copied()))
}

/// JSON form of a [`ModelFit`]. Coefficients are keyed `beta_1..`,
/// `alpha`, `theta` (or `intercept`), `gamma_1..`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub spec: DesignSpec,
    pub mu_hat: Map<String, Value>,
    pub se: Map<String, Value>,
    pub sigma2_hat: f64,
    pub rss: f64,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub n_obs: usize,
    pub n_params: usize,
    /// Embedding coefficients are identified only up to an orthogonal
    /// rotation of the eigenvector basis.
    pub beta_rotation_caveat: bool,
    pub cov_hat: Vec<Vec<f64>>,
    pub latent_scale: f64,
    pub latent: Vec<Vec<f64>>,
    pub diagnostics: Diagnostics,
}

/// Fits `spec` with caller-supplied latent regressors (for example the true
/// population eigenvectors).
pub fn fit_with_latent(panel: &Panel, lap: &Laplacian, latent: &DMatrix<f64>, spec: &DesignSpec) -> Result<ModelFit> {
    let design = build_design(panel, lap, latent, spec)?;
    let fit = fit_ls(&design.w, &design.y)?;
    let diagnostics = Diagnostics {
        condition_number: fit.condition_number,
        ..Diagnostics::default()
    };
    Ok(ModelFit {
        spec: *spec,
        names: spec.coef_names(panel.p()),
        fit,
        latent: latent.clone(),
        latent_scale: spec.latent_scale(panel.n(), panel.t_len()),
        diagnostics,
    })
}

/// Latent regressors estimated from the graph, with their diagnostics.
pub fn estimate_latent(g: &Graph, spec: &DesignSpec, opts: &FitOptions) -> Result<(DMatrix<f64>, Diagnostics)> {
    spec.validate()?;
    let n = g.n();
    let k = spec.k();
    if k == 0 {
        return Ok((DMatrix::zeros(n, 0), Diagnostics::default()));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("k = {k} exceeds {n} nodes")));
    }
    let pairs = top_eigenpairs(g, (k + 1).min(n), &opts.eigen)?;
    let mut diag = Diagnostics {
        eigenvalues: pairs.values.clone(),
        ..Diagnostics::default()
    };
    if pairs.values.len() > k {
        let gap = pairs.values[k - 1].abs() - pairs.values[k].abs();
        diag.eigengap = Some(gap);
        if gap > 0.0 {
            diag.kappa = Some((k as f64 * n as f64 * g.density()).sqrt() / gap);
        }
    }
    let latent = match spec {
        DesignSpec::Amnar { .. } => {
            let lsm = fit_lsm(g, k, &opts.lsm)?;
            let r = lsm.state.residuals();
            diag.lsm = Some(LsmDiagnostics {
                loglik: lsm.loglik,
                iterations: lsm.iterations,
                converged: lsm.converged,
                stalled: lsm.stalled,
                centering: r.centering,
                orthogonality: r.orthogonality,
                max_row_norm: r.max_row_norm,
            });
            lsm.state.to_matrix()
        }
        _ => pairs.vectors.columns(0, k).into_owned(),
    };
    Ok((latent, diag))
}

/// Estimates the latent regressors from `g` and fits `spec` by least squares.
pub fn fit_model(panel: &Panel, g: &Graph, spec: &DesignSpec, opts: &FitOptions) -> Result<ModelFit> {
    let lap = normalized_laplacian(g, opts.allow_isolated)?;
    let (latent, diag) = estimate_latent(g, spec, opts)?;
    let mut model = fit_with_latent(panel, &lap, &latent, spec)?;
    model.diagnostics = Diagnostics {
        condition_number: model.fit.condition_number,
        ..diag
    };
    Ok(model)
}

pub fn fit_nar(panel: &Panel, g: &Graph, opts: &FitOptions) -> Result<ModelFit> {
    fit_model(panel, g, &DesignSpec::Nar, opts)
}

/// ENAR with the `k` leading adjacency eigenvectors as latent regressors.
pub fn fit_enar(panel: &Panel, g: &Graph, k: usize, opts: &FitOptions) -> Result<ModelFit> {
    fit_model(panel, g, &DesignSpec::Enar { k }, opts)
}

/// AMNAR with `[Q̂ | v̂]` from the constrained latent space MLE.
pub fn fit_amnar(panel: &Panel, g: &Graph, k: usize, s: f64, opts: &FitOptions) -> Result<ModelFit> {
    fit_model(panel, g, &DesignSpec::Amnar { k, s }, opts)
}

pub fn fit_enr(panel: &Panel, g: &Graph, k: usize, intercept: bool, opts: &FitOptions) -> Result<ModelFit> {
    fit_model(panel, g, &DesignSpec::Enr { k, intercept }, opts)
}

/// Point forecast `ŷ_{T+1} = Ŵ_T μ̂` from the last response `y_t` and
/// covariates `z_t`.
pub fn predict_one_step(
    model: &ModelFit,
    lap: &Laplacian,
    y_t: &DVector<f64>,
    z_t: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    let block = regressor_block(&model.spec, lap, &model.latent, model.latent_scale, y_t, z_t)?;
    if block.ncols() != model.fit.mu_hat.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} regressors for {} coefficients",
            block.ncols(),
            model.fit.mu_hat.len()
        )));
    }
    Ok(block * &model.fit.mu_hat)
}

/// One window of [`rolling_one_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct WindowForecast {
    /// First response index `s` of the window `y_s..y_{s+len}`.
    pub start: usize,
    pub forecast: DVector<f64>,
    pub actual: DVector<f64>,
    /// Mean squared prediction error over nodes.
    pub mspe: f64,
}

/// Refits `spec` on `windows` consecutive windows of `window_len`
/// transitions and forecasts the response after each. The last window's
/// target is `y_T`. Latent regressors are estimated once from `g`.
pub fn rolling_one_step(
    panel: &Panel,
    g: &Graph,
    spec: &DesignSpec,
    window_len: usize,
    windows: usize,
    opts: &FitOptions,
) -> Result<Vec<WindowForecast>> {
    let t_len = panel.t_len();
    if window_len == 0 || windows == 0 || window_len + windows > t_len {
        return Err(Error::InvalidArgument(format!(
            "{windows} windows of length {window_len} need more than T = {t_len} transitions"
        )));
    }
    let lap = normalized_laplacian(g, opts.allow_isolated)?;
    let (latent, _) = estimate_latent(g, spec, opts)?;
    let first = t_len - window_len - windows;
    (first..first + windows)
        .map(|start| {
            let sub = panel.window(start, window_len)?;
            let model = fit_with_latent(&sub, &lap, &latent, spec)?;
            let origin = start + window_len;
            let forecast = predict_one_step(&model, &lap, &panel.y_at(origin), &panel.z()[origin])?;
            let actual = panel.y_at(origin + 1);
            let mspe = (&forecast - &actual).norm_squared() / actual.len() as f64;
            Ok(WindowForecast {
                start,
                forecast,
                actual,
                mspe,
            })
        })
        .collect()
}
