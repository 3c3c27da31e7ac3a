//! Model parameters, stationary moments and panel simulation.

mod moments;
mod params;
mod simulate;

pub use moments::{autocov, check_stationarity, stationary_moments, StationaryMoments};
pub use params::{alternating_beta, latent_multiplier, validate_rate, AmnarParams, CovariateSpec, EnarParams, Panel};
pub use simulate::{
    simulate, simulate_amnar, simulate_enar, stationary_mean, Dynamics, Init, BURN_IN, EXACT_INIT_MAX_N,
};
