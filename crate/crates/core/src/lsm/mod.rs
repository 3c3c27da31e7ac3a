//! Additive and multiplicative latent space model
//! `logit P(a_ij = 1) = χ_ij = q_i'q_j + v_i + v_j`, fitted by projected
//! gradient ascent over the identifiable set `Q'1 = 0`, `Q'Q` diagonal,
//! bounded rows of `[Q | v]`.

mod fit;
mod model;

pub use fit::{fit_lsm, initial_state, LsmConfig, LsmFit};
pub use model::{
    lsm_gradient, lsm_loglik, planted_lsm, project_constraints, sample_lsm_graph, softplus, ConstraintResiduals,
    LsmState,
};
