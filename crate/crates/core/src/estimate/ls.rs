use nalgebra::{DMatrix, DVector};

use super::qr::PivotedQr;
use crate::{Error, Result};

/// Relative pivot size below which a design column counts as collinear.
pub const RANK_TOL: f64 = 1e-10;

/// Ordinary least-squares fit with plug-in covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub mu_hat: DVector<f64>,
    /// `RSS / (n_obs - n_params)`.
    pub sigma2_hat: f64,
    /// `σ̂² (W'W)^{-1}`.
    pub cov_hat: DMatrix<f64>,
    pub rss: f64,
    pub n_obs: usize,
    pub n_params: usize,
    /// Gaussian log-likelihood at `σ̃² = RSS / n_obs`.
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    /// Condition number of `W'W`.
    pub condition_number: f64,
}

impl FitResult {
    /// Plug-in standard errors.
    pub fn se(&self) -> Vec<f64> {
        self.cov_hat.diagonal().iter().map(|v| v.max(0.0).sqrt()).collect()
    }
}

/// Solves `min ‖y - W μ‖` by column-pivoted QR.
///
/// Columns whose pivot falls below [`RANK_TOL`] relative to the first are
/// reported as [`Error::RankDeficient`] instead of being dropped.
pub fn fit_ls(w: &DMatrix<f64>, y: &DVector<f64>) -> Result<FitResult> {
    let (n_obs, d) = w.shape();
    if y.len() != n_obs {
        return Err(Error::DimensionMismatch(format!(
            "design has {n_obs} rows, response has {}",
            y.len()
        )));
    }
    if n_obs <= d {
        return Err(Error::InsufficientData { obs: n_obs, params: d });
    }
    let qr = PivotedQr::new(w);
    let deficient = qr.deficient_columns(RANK_TOL);
    if !deficient.is_empty() {
        return Err(Error::RankDeficient(deficient));
    }
    let mu_hat = qr.solve(y).ok_or_else(|| Error::RankDeficient(qr.perm().to_vec()))?;
    let gram_inv = qr.gram_inverse().ok_or_else(|| Error::RankDeficient(qr.perm().to_vec()))?;
    let resid = y - w * &mu_hat;
    let rss = resid.norm_squared();
    let sigma2_hat = rss / (n_obs - d) as f64;
    let mut cov_hat = gram_inv * sigma2_hat;
    cov_hat = (&cov_hat + cov_hat.transpose()) * 0.5;
    let nf = n_obs as f64;
    let loglik = -0.5 * nf * ((2.0 * std::f64::consts::PI * rss / nf).ln() + 1.0);
    let k = (d + 1) as f64;
    let sv = qr.r().singular_values();
    let condition_number = if d == 0 {
        1.0
    } else {
        (sv.max() / sv.min()).powi(2)
    };
    Ok(FitResult {
        mu_hat,
        sigma2_hat,
        cov_hat,
        rss,
        n_obs,
        n_params: d,
        loglik,
        aic: -2.0 * loglik + 2.0 * k,
        bic: -2.0 * loglik + k * nf.ln(),
        condition_number,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_response() {
        let w = DMatrix::from_fn(10, 2, |i, j| ((i + 1) * (j + 2)) as f64 + (i * i) as f64 * j as f64);
        let fit = fit_ls(&w, &DVector::zeros(10)).unwrap();
        assert_eq!(fit.mu_hat.amax(), 0.0);
        assert_eq!(fit.sigma2_hat, 0.0);
    }

    #[test]
    fn exact_line() {
        let w = DMatrix::from_fn(5, 2, |i, j| if j == 0 { 1.0 } else { i as f64 });
        let y = DVector::from_fn(5, |i, _| 2.0 - 3.0 * i as f64);
        let fit = fit_ls(&w, &y).unwrap();
        assert!((fit.mu_hat[0] - 2.0).abs() < 1e-12);
        assert!((fit.mu_hat[1] + 3.0).abs() < 1e-12);
    }

    #[test]
    fn information_criteria() {
        let w = DMatrix::from_fn(8, 1, |i, _| (i + 1) as f64);
        let y = DVector::from_fn(8, |i, _| (i + 1) as f64 + if i % 2 == 0 { 0.1 } else { -0.1 });
        let fit = fit_ls(&w, &y).unwrap();
        let s2 = fit.rss / 8.0;
        let ll = -4.0 * ((2.0 * std::f64::consts::PI * s2).ln() + 1.0);
        assert!((fit.loglik - ll).abs() < 1e-12);
        assert!((fit.aic - (-2.0 * ll + 4.0)).abs() < 1e-12);
        assert!((fit.bic - (-2.0 * ll + 2.0 * 8f64.ln())).abs() < 1e-12);
        assert!((fit.sigma2_hat - fit.rss / 7.0).abs() < 1e-15);
    }

    #[test]
    fn rank_deficiency_names_columns() {
        let w = DMatrix::from_fn(6, 3, |i, j| if j == 2 { 0.0 } else { (i * (j + 1)) as f64 + j as f64 });
        assert!(matches!(fit_ls(&w, &DVector::zeros(6)), Err(Error::RankDeficient(c)) if c == vec![2]));
        assert!(matches!(
            fit_ls(&DMatrix::zeros(2, 2), &DVector::zeros(2)),
            Err(Error::InsufficientData { obs: 2, params: 2 })
        ));
    }
}
