use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Parameters of the embedding network autoregression
/// `y_{t+1} = α y_t + θ L y_t + U β + Z_t γ + ε_{t+1}`.
///
/// A NAR model is the special case with empty `beta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnarParams {
    pub alpha: f64,
    pub theta: f64,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub sigma: f64,
}

impl EnarParams {
    /// `α = θ = 1/5`, alternating harmonic `β`, `γ = (1/3, -1/6, 0)` and
    /// noise variance `0.25`.
    pub fn default_for(k: usize) -> Self {
        EnarParams {
            alpha: 0.2,
            theta: 0.2,
            beta: alternating_beta(k),
            gamma: vec![1.0 / 3.0, -1.0 / 6.0, 0.0],
            sigma: 0.5,
        }
    }

    /// Variance of `γ'z + ε`.
    pub fn innovation_variance(&self, cov: &CovariateSpec) -> f64 {
        innovation_variance(self.sigma, &self.gamma, cov)
    }
}

/// `(1, -1/2, 1/3, ..., (-1)^{k-1}/k)`.
pub fn alternating_beta(k: usize) -> Vec<f64> {
    (0..k)
        .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 } / (i + 1) as f64)
        .collect()
}

pub(crate) fn innovation_variance(sigma: f64, gamma: &[f64], cov: &CovariateSpec) -> f64 {
    sigma * sigma
        + gamma
            .iter()
            .zip(&cov.variances)
            .map(|(g, v)| g * g * v)
            .sum::<f64>()
}

/// Parameters of the additive and multiplicative latent effect model; the
/// latent term is `r (Q β₁ + v β₂)` with `r = N^{-s} T^{-1/2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmnarParams {
    pub alpha: f64,
    pub theta: f64,
    pub beta1: Vec<f64>,
    pub beta2: f64,
    pub gamma: Vec<f64>,
    pub sigma: f64,
    pub s: f64,
}

impl AmnarParams {
    /// Same dynamics as [`EnarParams::default_for`], `β₁` alternating
    /// harmonic, `β₂` continuing the pattern, `s = 1/4`.
    pub fn default_for(k: usize) -> Self {
        let full = alternating_beta(k + 1);
        AmnarParams {
            alpha: 0.2,
            theta: 0.2,
            beta1: full[..k].to_vec(),
            beta2: full[k],
            gamma: vec![1.0 / 3.0, -1.0 / 6.0, 0.0],
            sigma: 0.5,
            s: 0.25,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_rate(self.s)?;
        if !(self.sigma >= 0.0) {
            return Err(Error::InvalidArgument("sigma must be nonnegative".into()));
        }
        Ok(())
    }

    /// `(β₁', β₂)'`.
    pub fn beta(&self) -> Vec<f64> {
        let mut b = self.beta1.clone();
        b.push(self.beta2);
        b
    }
}

pub fn validate_rate(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 0.5) {
        return Err(Error::InvalidArgument(format!("rate exponent s = {s} is outside (0, 1/2)")));
    }
    Ok(())
}

/// `r = N^{-s} T^{-1/2}`.
pub fn latent_multiplier(n: usize, t_len: usize, s: f64) -> f64 {
    (n as f64).powf(-s) / (t_len as f64).sqrt()
}

/// Independent Gaussian covariates with diagonal covariance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub variances: Vec<f64>,
}

impl CovariateSpec {
    pub fn new(variances: Vec<f64>) -> Result<Self> {
        if variances.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("covariate variances must be positive".into()));
        }
        Ok(CovariateSpec { variances })
    }

    pub fn p(&self) -> usize {
        self.variances.len()
    }
}

impl Default for CovariateSpec {
    /// `diag(3, 2, 1)`.
    fn default() -> Self {
        CovariateSpec {
            variances: vec![3.0, 2.0, 1.0],
        }
    }
}

/// Responses `y` (`N x (T+1)`, column `t` is `y_t`) and covariates
/// (`T` slices of `N x p`, slice `t` is `Z_t`).
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    y: DMatrix<f64>,
    z: Vec<DMatrix<f64>>,
}

impl Panel {
    pub fn new(y: DMatrix<f64>, z: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = y.nrows();
        if y.ncols() == 0 {
            return Err(Error::DimensionMismatch("panel needs at least y_0".into()));
        }
        if z.len() + 1 != y.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "{} covariate slices for {} response columns",
                z.len(),
                y.ncols()
            )));
        }
        let p = z.first().map_or(0, |m| m.ncols());
        if let Some((t, m)) = z.iter().enumerate().find(|(_, m)| m.nrows() != n || m.ncols() != p) {
            return Err(Error::DimensionMismatch(format!(
                "covariate slice {t} is {}x{}, expected {n}x{p}",
                m.nrows(),
                m.ncols()
            )));
        }
        Ok(Panel { y, z })
    }

    pub fn n(&self) -> usize {
        self.y.nrows()
    }

    /// Number of transitions `T`.
    pub fn t_len(&self) -> usize {
        self.z.len()
    }

    pub fn p(&self) -> usize {
        self.z.first().map_or(0, |m| m.ncols())
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn z(&self) -> &[DMatrix<f64>] {
        &self.z
    }

    pub fn y_at(&self, t: usize) -> DVector<f64> {
        self.y.column(t).into_owned()
    }

    /// Sub-panel `y_start..=y_{start+len}` with covariates `Z_start..Z_{start+len-1}`.
    pub fn window(&self, start: usize, len: usize) -> Result<Panel> {
        if len == 0 || start + len > self.t_len() {
            return Err(Error::DimensionMismatch(format!(
                "window [{start}, {}] exceeds T = {}",
                start + len,
                self.t_len()
            )));
        }
        Panel::new(
            self.y.columns(start, len + 1).into_owned(),
            self.z[start..start + len].to_vec(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alternating_beta_values() {
        assert_eq!(alternating_beta(3), vec![1.0, -0.5, 1.0 / 3.0]);
        assert!(alternating_beta(0).is_empty());
    }

    #[test]
    fn default_innovation_variance() {
        let p = EnarParams::default_for(3);
        let c = p.innovation_variance(&CovariateSpec::default());
        assert!((c - (0.25 + 3.0 / 9.0 + 2.0 / 36.0)).abs() < 1e-15);
    }

    #[test]
    fn multiplier_arithmetic() {
        assert!((latent_multiplier(16, 4, 0.25) - 0.25).abs() < 1e-15);
        let ratio = latent_multiplier(64, 9, 0.25) / latent_multiplier(32, 9, 0.25);
        assert!((ratio - 2f64.powf(-0.25)).abs() < 1e-15);
    }

    #[test]
    fn rate_bounds() {
        let mut p = AmnarParams::default_for(2);
        p.validate().unwrap();
        p.s = 0.5;
        assert!(p.validate().is_err());
        p.s = 0.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn panel_shape_checks_and_window() {
        let y = DMatrix::from_fn(2, 4, |i, t| (10 * i + t) as f64);
        let z = vec![DMatrix::zeros(2, 1); 3];
        let panel = Panel::new(y.clone(), z.clone()).unwrap();
        assert_eq!((panel.n(), panel.t_len(), panel.p()), (2, 3, 1));
        let w = panel.window(1, 2).unwrap();
        assert_eq!(w.y_at(0), panel.y_at(1));
        assert_eq!(w.t_len(), 2);
        assert!(panel.window(2, 2).is_err());
        assert!(Panel::new(y, z[..2].to_vec()).is_err());
    }
}
