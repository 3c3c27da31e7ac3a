use nalgebra::{DMatrix, DVector};

use crate::network::Laplacian;
use crate::{Error, Result};

const LYAPUNOV_TOL: f64 = 1e-12;
/// Squaring steps allowed; `m` steps equal `2^m` plain steps, so 17 covers
/// more than 100000 plain iterations.
const LYAPUNOV_MAX_DOUBLINGS: usize = 17;

#[derive(Debug, Clone)]
pub struct StationaryMoments {
    /// Transition matrix `G = αI + θL`.
    pub g: DMatrix<f64>,
    /// Stationary mean `(I - G)^{-1} b` for latent effect `b`.
    pub phi: DVector<f64>,
    /// Lag-0 covariance, solving `Γ = G Γ G' + c I`.
    pub gamma0: DMatrix<f64>,
    /// Innovation variance `σ² + γ'Σ_zγ`.
    pub c: f64,
}

/// True iff `|alpha| + |theta| < 1`.
pub fn check_stationarity(alpha: f64, theta: f64) -> bool {
    alpha.abs() + theta.abs() < 1.0
}

/// Stationary moments of `y_{t+1} = G y_t + b + e_{t+1}` with
/// `Var(e) = c I`.
///
/// `Γ(0)` comes from the fixed-point iteration `Γ ← G Γ G' + c I` started
/// at `c I` (accelerated by squaring), stopped once the relative Frobenius
/// change drops below 1e-12.
pub fn stationary_moments(
    lap: &Laplacian,
    latent_effect: &DVector<f64>,
    alpha: f64,
    theta: f64,
    c: f64,
) -> Result<StationaryMoments> {
    if !check_stationarity(alpha, theta) {
        return Err(Error::NotStationary(alpha.abs() + theta.abs()));
    }
    let n = lap.n();
    if latent_effect.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "latent effect has {} entries for {n} nodes",
            latent_effect.len()
        )));
    }
    let g = DMatrix::identity(n, n) * alpha + lap.to_dense() * theta;
    let i_minus_g = DMatrix::identity(n, n) - &g;
    let phi = i_minus_g
        .lu()
        .solve(latent_effect)
        .ok_or_else(|| Error::NotStationary(alpha.abs() + theta.abs()))?;
    let gamma0 = lyapunov_fixed_point(&g, c)?;
    Ok(StationaryMoments { g, phi, gamma0, c })
}

/// Partial sums `Γ_m = Σ_{j<m} G^j (cI) G'^j` of the fixed-point iteration
/// `Γ ← G Γ G' + c I`, advanced by squaring: `Γ ← Γ + A Γ A'`, `A ← A²`.
fn lyapunov_fixed_point(g: &DMatrix<f64>, c: f64) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let mut current = DMatrix::identity(n, n) * c;
    if c == 0.0 {
        return Ok(current);
    }
    let mut a = g.clone();
    for _ in 0..LYAPUNOV_MAX_DOUBLINGS {
        let mut step = &a * &current * a.transpose();
        symmetrize(&mut step);
        current += &step;
        if step.norm() <= LYAPUNOV_TOL * current.norm() {
            return Ok(current);
        }
        a = &a * &a;
    }
    Err(Error::LyapunovNonconvergence(1 << LYAPUNOV_MAX_DOUBLINGS))
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// `Γ(h) = Cov(y_t, y_{t-h})`: `G^h Γ(0)` for `h >= 0` and `Γ(-h)'` otherwise.
pub fn autocov(m: &StationaryMoments, h: i64) -> DMatrix<f64> {
    if h < 0 {
        return autocov(m, -h).transpose();
    }
    let mut out = m.gamma0.clone();
    for _ in 0..h {
        out = &m.g * out;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{normalized_laplacian, Graph};

    fn small_graph() -> Laplacian {
        let g = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0), (0, 2)]).unwrap();
        normalized_laplacian(&g, false).unwrap()
    }

    #[test]
    fn stationarity_region() {
        assert!(check_stationarity(0.2, 0.2));
        assert!(!check_stationarity(0.5, 0.5));
        assert!(check_stationarity(-0.3, 0.69));
    }

    #[test]
    fn pure_momentum_is_scalar() {
        let lap = small_graph();
        let v = DVector::from_vec(vec![1.0, -2.0, 0.5, 0.0, 3.0]);
        let m = stationary_moments(&lap, &v, 0.6, 0.0, 0.3).unwrap();
        assert!((&m.phi - &v / 0.4).amax() < 1e-12);
        let want = DMatrix::identity(5, 5) * (0.3 / (1.0 - 0.36));
        assert!((&m.gamma0 - want).amax() < 1e-12);
        let g1 = autocov(&m, 1);
        assert!((g1 - &m.gamma0 * 0.6).amax() < 1e-12);
    }

    #[test]
    fn zero_effect_zero_mean() {
        let lap = small_graph();
        let m = stationary_moments(&lap, &DVector::zeros(5), 0.3, 0.4, 1.0).unwrap();
        assert_eq!(m.phi.amax(), 0.0);
    }

    #[test]
    fn fixed_point_residual_and_symmetry() {
        let lap = small_graph();
        let m = stationary_moments(&lap, &DVector::zeros(5), -0.4, 0.5, 0.7).unwrap();
        let resid = &m.gamma0 - (&m.g * &m.gamma0 * m.g.transpose() + DMatrix::identity(5, 5) * 0.7);
        assert!(resid.norm() < 1e-8 * m.gamma0.norm());
        for h in 0..4 {
            assert_eq!(autocov(&m, h).transpose(), autocov(&m, -h));
        }
        assert_eq!(autocov(&m, 0), m.gamma0);
    }

    #[test]
    fn rejects_nonstationary() {
        let lap = small_graph();
        assert!(matches!(
            stationary_moments(&lap, &DVector::zeros(5), 0.5, -0.5, 1.0),
            Err(Error::NotStationary(_))
        ));
    }
}
