use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::model::{lsm_gradient, lsm_loglik, project_constraints, LsmState};
use crate::network::{top_eigenpairs, EigenConfig, Graph};
use crate::{Error, Result};

const MIN_STEP: f64 = 1e-12;

/// Settings for [`fit_lsm`]. `None` fields resolve to size-dependent
/// defaults: `step_init = 1/N`, `row_norm_cap = 3 √(K+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LsmConfig {
    pub max_iters: usize,
    /// Stop once the relative log-likelihood gain of a step falls below this.
    pub tol: f64,
    pub step_init: Option<f64>,
    pub backtrack: f64,
    pub row_norm_cap: Option<f64>,
}

impl Default for LsmConfig {
    fn default() -> Self {
        LsmConfig {
            max_iters: 500,
            tol: 1e-8,
            step_init: None,
            backtrack: 0.5,
            row_norm_cap: None,
        }
    }
}

impl LsmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument("lsm tol must be positive".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidArgument("lsm backtrack factor must lie in (0, 1)".into()));
        }
        if matches!(self.step_init, Some(s) if !(s > 0.0)) {
            return Err(Error::InvalidArgument("lsm step_init must be positive".into()));
        }
        if matches!(self.row_norm_cap, Some(c) if !(c > 0.0)) {
            return Err(Error::InvalidArgument("lsm row_norm_cap must be positive".into()));
        }
        Ok(())
    }

    pub fn cap_for(&self, k: usize) -> f64 {
        self.row_norm_cap.unwrap_or(3.0 * ((k + 1) as f64).sqrt())
    }
}

/// Output of [`fit_lsm`].
#[derive(Debug, Clone)]
pub struct LsmFit {
    pub state: LsmState,
    pub loglik: f64,
    /// Log-likelihood of the projected initializer followed by every
    /// accepted iterate.
    pub trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// The line search could not find an ascent step above the minimum
    /// step size; `state` is the last accepted iterate.
    pub stalled: bool,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Spectral warm start: `v_i = logit(d_i/(N-1)) / 2`, so that `σ(v_i + v_j)`
/// matches the degree-implied probability for equal nodes, and `Q` from the
/// top positive eigenpairs of `(A - σ(v1' + 1v')) / (ρ̂(1-ρ̂))`, projected.
pub fn initial_state(g: &Graph, k: usize, cap: f64) -> Result<LsmState> {
    let n = g.n();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!("latent dimension {k} must lie in 1..{n}")));
    }
    let lo = 0.5 / n as f64;
    let v = DVector::from_iterator(
        n,
        g.degrees()
            .into_iter()
            .map(|d| 0.5 * logit((d as f64 / (n - 1) as f64).clamp(lo, 1.0 - lo))),
    );
    let rho = g.density().clamp(lo, 1.0 - lo);
    let scale = 1.0 / (rho * (1.0 - rho));
    let mut resid = g.to_dense();
    for j in 0..n {
        for i in 0..n {
            if i != j {
                let chi: f64 = v[i] + v[j];
                resid[(i, j)] -= 1.0 / (1.0 + (-chi).exp());
            }
        }
    }
    resid *= scale;
    let pairs = top_eigenpairs(&resid, (2 * k).min(n), &EigenConfig::default())?;
    let mut order: Vec<usize> = (0..pairs.values.len()).collect();
    order.sort_by(|&a, &b| pairs.values[b].total_cmp(&pairs.values[a]));
    let mut q = DMatrix::zeros(n, k);
    for (dst, &src) in order.iter().take(k).enumerate() {
        let lambda = pairs.values[src].max(0.0);
        q.set_column(dst, &(pairs.vectors.column(src) * lambda.sqrt()));
    }
    Ok(project_constraints(&LsmState { q, v }, cap))
}

/// Constrained maximum likelihood by projected gradient ascent.
///
/// Each iteration tries a step from twice the last accepted size and halves
/// (by `backtrack`) until the projected candidate strictly improves the
/// log-likelihood, so the trace is nondecreasing.
pub fn fit_lsm(g: &Graph, k: usize, config: &LsmConfig) -> Result<LsmFit> {
    config.validate()?;
    let cap = config.cap_for(k);
    let mut state = initial_state(g, k, cap)?;
    let mut ll = lsm_loglik(&state, g)?;
    let mut trace = vec![ll];
    let step_init = config.step_init.unwrap_or(1.0 / g.n() as f64);
    let mut step = step_init;
    let mut converged = false;
    let mut stalled = false;
    let mut iterations = 0;
    while iterations < config.max_iters {
        iterations += 1;
        let (dq, dv) = lsm_gradient(&state, g)?;
        let mut eta = (2.0 * step).min(1e3 * step_init);
        let accepted = loop {
            if eta < MIN_STEP {
                break None;
            }
            let candidate = project_constraints(
                &LsmState {
                    q: &state.q + &dq * eta,
                    v: &state.v + &dv * eta,
                },
                cap,
            );
            let cand_ll = lsm_loglik(&candidate, g)?;
            if cand_ll > ll {
                break Some((candidate, cand_ll));
            }
            eta *= config.backtrack;
        };
        let Some((next, next_ll)) = accepted else {
            log::warn!("latent space fit stalled after {iterations} iterations");
            stalled = true;
            break;
        };
        let gain = (next_ll - ll) / ll.abs().max(1.0);
        state = next;
        ll = next_ll;
        step = eta;
        trace.push(ll);
        if gain < config.tol {
            converged = true;
            break;
        }
    }
    Ok(LsmFit {
        state,
        loglik: ll,
        trace,
        iterations,
        converged,
        stalled,
    })
}
