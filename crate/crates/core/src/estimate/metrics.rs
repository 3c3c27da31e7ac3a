use nalgebra::{DMatrix, DVector};

use super::FitResult;
use crate::{Error, Result};

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    if m.ncols() == 1 || m.nrows() == 1 {
        return m.norm();
    }
    m.singular_values().max()
}

/// `‖B - B̂‖ / ‖B‖` in the spectral norm (Euclidean for vectors).
pub fn rmse_rel(b_true: &DMatrix<f64>, b_hat: &DMatrix<f64>) -> Result<f64> {
    if b_true.shape() != b_hat.shape() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} versus {:?}",
            b_true.shape(),
            b_hat.shape()
        )));
    }
    let denom = spectral_norm(b_true);
    if denom == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok(spectral_norm(&(b_true - b_hat)) / denom)
}

/// Scalar version of [`rmse_rel`]: `|b - b̂| / |b|`.
pub fn rel_error(b_true: f64, b_hat: f64) -> Result<f64> {
    if b_true == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok((b_true - b_hat).abs() / b_true.abs())
}

/// One-step relative prediction error `‖W_T(μ̂ - μ)‖ / ‖W_T μ‖`.
pub fn rmsp(w_t: &DMatrix<f64>, mu_hat: &DVector<f64>, mu_true: &DVector<f64>) -> Result<f64> {
    if w_t.ncols() != mu_hat.len() || mu_hat.len() != mu_true.len() {
        return Err(Error::DimensionMismatch("regressor and coefficient sizes differ".into()));
    }
    forecast_error(&(w_t * mu_hat), &(w_t * mu_true))
}

/// `‖ŷ - m‖ / ‖m‖` for a forecast `ŷ` of the conditional mean `m`. Equals
/// [`rmsp`] when both sides share the regressors.
pub fn forecast_error(y_hat: &DVector<f64>, mean: &DVector<f64>) -> Result<f64> {
    if y_hat.len() != mean.len() {
        return Err(Error::DimensionMismatch("forecast length differs from target".into()));
    }
    let denom = mean.norm();
    if denom == 0.0 {
        return Err(Error::ZeroDenominator);
    }
    Ok((y_hat - mean).norm() / denom)
}

/// Standard normal quantile (Wichura's AS 241, about 1e-16 relative accuracy).
#[allow(clippy::excessive_precision)]
pub fn norm_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q
            * (((((((2509.0809287301226727 * r + 33430.575583588128105) * r + 67265.770927008700853) * r
                + 45921.953931549871457)
                * r
                + 13731.693765509461125)
                * r
                + 1971.5909503065514427)
                * r
                + 133.14166789178437745)
                * r
                + 3.387132872796366608)
            / (((((((5226.495278852545925 * r + 28729.085735721942674) * r + 39307.89580009271061) * r
                + 21213.794301586595867)
                * r
                + 5394.1960214247511077)
                * r
                + 687.1870074920579083)
                * r
                + 42.313330701600911252)
                * r
                + 1.0);
    }
    let mut r = if q < 0.0 { p } else { 1.0 - p };
    r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        (((((((7.7454501427834140764e-4 * r + 0.0227238449892691845833) * r + 0.24178072517745061177) * r
            + 1.27045825245236838258)
            * r
            + 3.64784832476320460504)
            * r
            + 5.7694972214606914055)
            * r
            + 4.6303378461565452959)
            * r
            + 1.42343711074968357734)
            / (((((((1.05075007164441684324e-9 * r + 5.475938084995344946e-4) * r + 0.0151986665636164571966)
                * r
                + 0.14810397642748007459)
                * r
                + 0.68976733498510000455)
                * r
                + 1.6763848301838038494)
                * r
                + 2.05319162663775882187)
                * r
                + 1.0)
    } else {
        let r = r - 5.0;
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 0.0012426609473880784386) * r
            + 0.026532189526576123093)
            * r
            + 0.29656057182850489123)
            * r
            + 1.7848265399172913358)
            * r
            + 5.4637849111641143699)
            * r
            + 6.6579046435011037772)
            / (((((((2.04426310338993978564e-15 * r + 1.4215117583164458887e-7) * r
                + 1.8463183175100546818e-5)
                * r
                + 7.868691311456132591e-4)
                * r
                + 0.0148753612908506148525)
                * r
                + 0.13692988092273580531)
                * r
                + 0.59983220655588793769)
                * r
                + 1.0)
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

/// Wald interval `μ̂_j ± z_{(1+level)/2} se_j`.
pub fn confint(fit: &FitResult, index: usize, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level {level} is outside (0, 1)")));
    }
    if index >= fit.mu_hat.len() {
        return Err(Error::InvalidArgument(format!(
            "coefficient {index} out of range for {} parameters",
            fit.mu_hat.len()
        )));
    }
    let z = norm_quantile(0.5 + 0.5 * level);
    let half = z * fit.cov_hat[(index, index)].max(0.0).sqrt();
    let m = fit.mu_hat[index];
    Ok((m - half, m + half))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_cases() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        assert_eq!(rmse_rel(&i2, &i2).unwrap(), 0.0);
        assert_eq!(rmse_rel(&i2, &DMatrix::zeros(2, 2)).unwrap(), 1.0);
        let half = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.5]));
        assert!((rmse_rel(&i2, &half).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(rmse_rel(&DMatrix::zeros(2, 2), &i2), Err(Error::ZeroDenominator)));
    }

    #[test]
    fn quantiles() {
        assert_eq!(norm_quantile(0.5), 0.0);
        assert!((norm_quantile(0.975) - 1.959963984540054).abs() < 1e-12);
        assert!((norm_quantile(0.025) + 1.959963984540054).abs() < 1e-12);
        assert!((norm_quantile(1e-10) + 6.361340902404056).abs() < 1e-9);
        assert!((norm_quantile(0.8413447460685429) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_interval() {
        let fit = FitResult {
            mu_hat: DVector::from_vec(vec![0.3]),
            sigma2_hat: 0.0,
            cov_hat: DMatrix::zeros(1, 1),
            rss: 0.0,
            n_obs: 3,
            n_params: 1,
            loglik: 0.0,
            aic: 0.0,
            bic: 0.0,
            condition_number: 1.0,
        };
        assert_eq!(confint(&fit, 0, 0.95).unwrap(), (0.3, 0.3));
        assert!(confint(&fit, 0, 1.0).is_err());
    }
}
