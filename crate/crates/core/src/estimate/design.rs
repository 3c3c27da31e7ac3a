use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::network::Laplacian;
use crate::process::{latent_multiplier, Panel};
use crate::{Error, Result};

/// Which regression is fitted.
///
/// Coefficients are ordered latent effects first, then `α`, `θ` (or the
/// grand mean for ENR), then `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum DesignSpec {
    /// Momentum and peer effect only.
    Nar,
    /// NAR plus `K` embedding columns.
    Enar { k: usize },
    /// NAR plus `r [Q | v]`, `K + 1` columns, `r = N^{-s} T^{-1/2}`.
    Amnar { k: usize, s: f64 },
    /// `y_{t+1}` on the embedding and `Z_t`, optionally with a grand mean.
    Enr { k: usize, intercept: bool },
}

impl DesignSpec {
    pub fn name(&self) -> &'static str {
        match self {
            DesignSpec::Nar => "nar",
            DesignSpec::Enar { .. } => "enar",
            DesignSpec::Amnar { .. } => "amnar",
            DesignSpec::Enr { .. } => "enr",
        }
    }

    /// Embedding or latent-space dimension `K` (0 for NAR).
    pub fn k(&self) -> usize {
        match *self {
            DesignSpec::Nar => 0,
            DesignSpec::Enar { k } | DesignSpec::Amnar { k, .. } | DesignSpec::Enr { k, .. } => k,
        }
    }

    /// Number of latent regressor columns.
    pub fn latent_cols(&self) -> usize {
        match *self {
            DesignSpec::Amnar { k, .. } => k + 1,
            other => other.k(),
        }
    }

    pub fn has_lags(&self) -> bool {
        !matches!(self, DesignSpec::Enr { .. })
    }

    /// Multiplier applied to the latent columns for a panel of size `n x t`.
    pub fn latent_scale(&self, n: usize, t_len: usize) -> f64 {
        match *self {
            DesignSpec::Amnar { s, .. } => latent_multiplier(n, t_len, s),
            _ => 1.0,
        }
    }

    /// Column count `d` for `p` covariates.
    pub fn n_params(&self, p: usize) -> usize {
        let middle = match *self {
            DesignSpec::Enr { intercept, .. } => usize::from(intercept),
            _ => 2,
        };
        self.latent_cols() + middle + p
    }

    /// Coefficient names: `beta_1..`, `alpha`, `theta` (or `intercept`), `gamma_1..`.
    pub fn coef_names(&self, p: usize) -> Vec<String> {
        let mut names: Vec<String> = (1..=self.latent_cols()).map(|j| format!("beta_{j}")).collect();
        match *self {
            DesignSpec::Enr { intercept, .. } => {
                if intercept {
                    names.push("intercept".into());
                }
            }
            _ => {
                names.push("alpha".into());
                names.push("theta".into());
            }
        }
        names.extend((1..=p).map(|j| format!("gamma_{j}")));
        names
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DesignSpec::Enar { k } | DesignSpec::Amnar { k, .. } if k == 0 => {
                Err(Error::InvalidArgument(format!("{} needs k >= 1", self.name())))
            }
            DesignSpec::Amnar { s, .. } => crate::process::validate_rate(s),
            _ => Ok(()),
        }
    }
}

/// Stacked regression `y = W μ + E`; row `t N + i` holds node `i` at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub w: DMatrix<f64>,
    pub y: DVector<f64>,
}

/// Regressors for one time step: an `N x d` block with rows
/// `(scale·x_i', y_it, (L y_t)_i, z_it')` or `(x_i', 1, z_it')` for ENR.
pub fn regressor_block(
    spec: &DesignSpec,
    lap: &Laplacian,
    latent: &DMatrix<f64>,
    scale: f64,
    y_t: &DVector<f64>,
    z_t: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = lap.n();
    let k = spec.latent_cols();
    if latent.nrows() != n || latent.ncols() != k {
        return Err(Error::DimensionMismatch(format!(
            "{} expects an {n}x{k} latent matrix, got {}x{}",
            spec.name(),
            latent.nrows(),
            latent.ncols()
        )));
    }
    if y_t.len() != n || z_t.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "response/covariate rows ({}, {}) do not match {n} nodes",
            y_t.len(),
            z_t.nrows()
        )));
    }
    let p = z_t.ncols();
    let d = spec.n_params(p);
    let mut block = DMatrix::zeros(n, d);
    block.columns_mut(0, k).copy_from(&(latent * scale));
    let mut col = k;
    match *spec {
        DesignSpec::Enr { intercept, .. } => {
            if intercept {
                block.column_mut(col).fill(1.0);
                col += 1;
            }
        }
        _ => {
            block.set_column(col, y_t);
            block.set_column(col + 1, &lap.apply(y_t));
            col += 2;
        }
    }
    block.columns_mut(col, p).copy_from(z_t);
    Ok(block)
}

/// Stacks the regression over all `T` transitions of `panel`.
///
/// `latent` has [`DesignSpec::latent_cols`] columns (none for NAR); AMNAR
/// columns are multiplied by `r = N^{-s} T^{-1/2}`.
pub fn build_design(panel: &Panel, lap: &Laplacian, latent: &DMatrix<f64>, spec: &DesignSpec) -> Result<Design> {
    spec.validate()?;
    let n = panel.n();
    let t_len = panel.t_len();
    if lap.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "panel has {n} nodes, Laplacian has {}",
            lap.n()
        )));
    }
    let scale = spec.latent_scale(n, t_len);
    let d = spec.n_params(panel.p());
    let mut w = DMatrix::zeros(n * t_len, d);
    let mut y = DVector::zeros(n * t_len);
    for t in 0..t_len {
        let block = regressor_block(spec, lap, latent, scale, &panel.y_at(t), &panel.z()[t])?;
        w.rows_mut(t * n, n).copy_from(&block);
        y.rows_mut(t * n, n).copy_from(&panel.y().column(t + 1));
    }
    Ok(Design { w, y })
}
