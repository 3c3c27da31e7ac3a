use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::moments::stationary_moments;
use super::params::{innovation_variance, latent_multiplier, AmnarParams, CovariateSpec, EnarParams, Panel};
use crate::network::Laplacian;
use crate::{Error, Result};

/// Largest `N` for which `y_0` is drawn exactly from `N(φ, Γ(0))`.
pub const EXACT_INIT_MAX_N: usize = 512;
/// Burn-in length used above [`EXACT_INIT_MAX_N`].
pub const BURN_IN: usize = 500;

/// How the initial response vector is produced.
#[derive(Debug, Clone)]
pub enum Init {
    /// Draw from the stationary law (exactly for small `N`, by burn-in otherwise).
    Stationary,
    /// Start from a given `y_0`.
    Fixed(DVector<f64>),
}

/// The recursion `y_{t+1} = α y_t + θ L y_t + b + Z_t γ + σ ε_{t+1}`.
#[derive(Debug, Clone)]
pub struct Dynamics {
    pub alpha: f64,
    pub theta: f64,
    /// Time-invariant latent term `b` (`Uβ`, `rXβ` or zero).
    pub latent_effect: DVector<f64>,
    pub gamma: Vec<f64>,
    pub sigma: f64,
}

impl Dynamics {
    pub fn enar(params: &EnarParams, u: &DMatrix<f64>) -> Result<Self> {
        if u.ncols() != params.beta.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} latent columns for {} beta coefficients",
                u.ncols(),
                params.beta.len()
            )));
        }
        let latent_effect = if u.ncols() == 0 {
            DVector::zeros(u.nrows())
        } else {
            u * DVector::from_column_slice(&params.beta)
        };
        Ok(Dynamics {
            alpha: params.alpha,
            theta: params.theta,
            latent_effect,
            gamma: params.gamma.clone(),
            sigma: params.sigma,
        })
    }

    /// AMNAR dynamics with `r = N^{-s} T^{-1/2}` for the given `T`.
    pub fn amnar(params: &AmnarParams, x: &DMatrix<f64>, t_len: usize) -> Result<Self> {
        params.validate()?;
        let beta = params.beta();
        if x.ncols() != beta.len() {
            return Err(Error::DimensionMismatch(format!(
                "latent matrix has {} columns, expected K + 1 = {}",
                x.ncols(),
                beta.len()
            )));
        }
        let r = latent_multiplier(x.nrows(), t_len, params.s);
        Ok(Dynamics {
            alpha: params.alpha,
            theta: params.theta,
            latent_effect: x * DVector::from_vec(beta) * r,
            gamma: params.gamma.clone(),
            sigma: params.sigma,
        })
    }

    /// One noise-free step `α y + θ L y + b + Z γ`.
    pub fn mean_step(&self, lap: &Laplacian, y: &DVector<f64>, z: &DMatrix<f64>) -> DVector<f64> {
        let mut next = y * self.alpha + lap.apply(y) * self.theta + &self.latent_effect;
        if !self.gamma.is_empty() {
            next += z * DVector::from_column_slice(&self.gamma);
        }
        next
    }
}

/// Simulates `t_len` transitions. Randomness is consumed in a fixed order
/// (initial state, then per step `Z_t` row by row and `ε_{t+1}`), so equal
/// seeds give identical panels.
pub fn simulate<R: Rng + ?Sized>(
    dynamics: &Dynamics,
    lap: &Laplacian,
    cov: &CovariateSpec,
    t_len: usize,
    init: &Init,
    rng: &mut R,
) -> Result<Panel> {
    let n = lap.n();
    if dynamics.latent_effect.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "latent effect has {} entries for {n} nodes",
            dynamics.latent_effect.len()
        )));
    }
    if dynamics.gamma.len() != cov.p() {
        return Err(Error::DimensionMismatch(format!(
            "{} covariate effects for {} covariates",
            dynamics.gamma.len(),
            cov.p()
        )));
    }
    let y0 = match init {
        Init::Fixed(y0) => {
            if y0.len() != n {
                return Err(Error::DimensionMismatch("initial state length".into()));
            }
            y0.clone()
        }
        Init::Stationary => stationary_draw(dynamics, lap, cov, rng)?,
    };
    let sds: Vec<f64> = cov.variances.iter().map(|v| v.sqrt()).collect();
    let mut y = DMatrix::zeros(n, t_len + 1);
    y.set_column(0, &y0);
    let mut z = Vec::with_capacity(t_len);
    let mut current = y0;
    for t in 0..t_len {
        let zt = draw_covariates(n, &sds, rng);
        let mut next = dynamics.mean_step(lap, &current, &zt);
        for v in next.iter_mut() {
            let e: f64 = StandardNormal.sample(rng);
            *v += dynamics.sigma * e;
        }
        y.set_column(t + 1, &next);
        z.push(zt);
        current = next;
    }
    Panel::new(y, z)
}

fn draw_covariates<R: Rng + ?Sized>(n: usize, sds: &[f64], rng: &mut R) -> DMatrix<f64> {
    let mut zt = DMatrix::zeros(n, sds.len());
    for i in 0..n {
        for (j, sd) in sds.iter().enumerate() {
            let e: f64 = StandardNormal.sample(rng);
            zt[(i, j)] = sd * e;
        }
    }
    zt
}

fn stationary_draw<R: Rng + ?Sized>(
    dynamics: &Dynamics,
    lap: &Laplacian,
    cov: &CovariateSpec,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let n = lap.n();
    let c = innovation_variance(dynamics.sigma, &dynamics.gamma, cov);
    if n > EXACT_INIT_MAX_N {
        if !super::check_stationarity(dynamics.alpha, dynamics.theta) {
            return Err(Error::NotStationary(dynamics.alpha.abs() + dynamics.theta.abs()));
        }
        let start = stationary_mean(dynamics, lap)?;
        let burn = simulate(dynamics, lap, cov, BURN_IN, &Init::Fixed(start), rng)?;
        return Ok(burn.y_at(BURN_IN));
    }
    let m = stationary_moments(lap, &dynamics.latent_effect, dynamics.alpha, dynamics.theta, c)?;
    let xi = DVector::from_fn(n, |_, _| StandardNormal.sample(rng));
    if m.gamma0.trace() == 0.0 {
        return Ok(m.phi);
    }
    let factor = match Cholesky::new(m.gamma0.clone()) {
        Some(ch) => ch.l(),
        None => {
            let jitter = 1e-10 * m.gamma0.trace() / n as f64;
            let mut bumped = m.gamma0.clone();
            for i in 0..n {
                bumped[(i, i)] += jitter;
            }
            Cholesky::new(bumped).ok_or(Error::CholeskyFailure)?.l()
        }
    };
    Ok(m.phi + factor * xi)
}

/// `(I - G)^{-1} b` without forming `Γ(0)`.
pub fn stationary_mean(dynamics: &Dynamics, lap: &Laplacian) -> Result<DVector<f64>> {
    let n = lap.n();
    let g = DMatrix::identity(n, n) * (1.0 - dynamics.alpha) - lap.to_dense() * dynamics.theta;
    g.lu()
        .solve(&dynamics.latent_effect)
        .ok_or_else(|| Error::NotStationary(dynamics.alpha.abs() + dynamics.theta.abs()))
}

/// ENAR panel with latent term `Uβ`; `u` is the population eigenvector
/// matrix (no columns for a NAR model).
pub fn simulate_enar<R: Rng + ?Sized>(
    params: &EnarParams,
    lap: &Laplacian,
    u: &DMatrix<f64>,
    cov: &CovariateSpec,
    t_len: usize,
    rng: &mut R,
) -> Result<Panel> {
    simulate(&Dynamics::enar(params, u)?, lap, cov, t_len, &Init::Stationary, rng)
}

/// AMNAR panel with latent term `r [Q | v] (β₁, β₂)`.
pub fn simulate_amnar<R: Rng + ?Sized>(
    params: &AmnarParams,
    lap: &Laplacian,
    x: &DMatrix<f64>,
    cov: &CovariateSpec,
    t_len: usize,
    rng: &mut R,
) -> Result<Panel> {
    simulate(&Dynamics::amnar(params, x, t_len)?, lap, cov, t_len, &Init::Stationary, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{normalized_laplacian, Graph};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lap(n: usize) -> Laplacian {
        let edges: Vec<_> = (0..n).flat_map(|i| [(i, (i + 1) % n), (i, (i + 3) % n)]).collect();
        normalized_laplacian(&Graph::from_edges(n, &edges).unwrap(), false).unwrap()
    }

    #[test]
    fn noiseless_path_stays_at_fixed_point() {
        let l = lap(10);
        let u = DMatrix::from_fn(10, 2, |i, j| ((i + 2 * j) as f64).cos() / 3.0);
        let params = EnarParams {
            alpha: 0.3,
            theta: 0.4,
            beta: vec![1.0, -2.0],
            gamma: vec![0.0; 3],
            sigma: 0.0,
        };
        let dynamics = Dynamics::enar(&params, &u).unwrap();
        let phi = stationary_mean(&dynamics, &l).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let panel = simulate(&dynamics, &l, &CovariateSpec::default(), 6, &Init::Fixed(phi.clone()), &mut rng).unwrap();
        for t in 0..=6 {
            assert!((panel.y_at(t) - &phi).amax() < 1e-12);
        }
        // the stationary draw collapses to phi as well
        let panel = simulate_enar(&params, &l, &u, &CovariateSpec::default(), 3, &mut rng).unwrap();
        assert!((panel.y_at(3) - &phi).amax() < 1e-12);
    }

    #[test]
    fn seed_determinism() {
        let l = lap(12);
        let u = DMatrix::from_fn(12, 1, |i, _| 1.0 / (12f64).sqrt() * if i % 2 == 0 { 1.0 } else { 0.5 });
        let params = EnarParams::default_for(1);
        let a = simulate_enar(&params, &l, &u, &CovariateSpec::default(), 5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = simulate_enar(&params, &l, &u, &CovariateSpec::default(), 5, &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        assert_eq!(a, b);
        assert_eq!((a.n(), a.t_len(), a.p()), (12, 5, 3));
    }

    #[test]
    fn zero_latent_amnar_matches_nar() {
        let l = lap(9);
        let x = DMatrix::from_fn(9, 3, |i, j| (i as f64 - 4.0) * (j as f64 + 1.0) / 10.0);
        let mut am = AmnarParams::default_for(2);
        am.beta1 = vec![0.0, 0.0];
        am.beta2 = 0.0;
        let mut en = EnarParams::default_for(0);
        en.gamma = am.gamma.clone();
        let cov = CovariateSpec::default();
        let a = simulate_amnar(&am, &l, &x, &cov, 4, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = simulate_enar(&en, &l, &DMatrix::zeros(9, 0), &cov, 4, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_nonstationary_params() {
        let l = lap(8);
        let mut params = EnarParams::default_for(0);
        params.alpha = 0.6;
        params.theta = 0.4;
        let r = simulate_enar(&params, &l, &DMatrix::zeros(8, 0), &CovariateSpec::default(), 2, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(matches!(r, Err(Error::NotStationary(_))));
    }
}
