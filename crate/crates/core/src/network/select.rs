//! Embedding dimension selection by edge cross-validation.

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;

use super::eigen::{top_eigenpairs, EigenConfig};
use super::Graph;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct CvConfig {
    pub k_max: usize,
    pub folds: usize,
    /// Fraction of node pairs hidden in each fold.
    pub holdout_fraction: f64,
}

impl CvConfig {
    pub fn new(k_max: usize) -> Self {
        CvConfig {
            k_max,
            folds: 5,
            holdout_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KSelection {
    pub k: usize,
    /// Mean held-out squared error for `k = 1..=k_max`.
    pub cv_errors: Vec<f64>,
}

/// Chooses the embedding dimension minimizing held-out reconstruction
/// error of the adjacency matrix.
///
/// Each fold hides a random subset of node pairs, rescales the remaining
/// entries by `1 / (1 - holdout_fraction)`, and scores the rank-`k`
/// truncated eigendecomposition of that matrix on the hidden pairs.
pub fn select_k<R: Rng + ?Sized>(g: &Graph, cfg: &CvConfig, rng: &mut R) -> Result<KSelection> {
    let n = g.n();
    if cfg.k_max == 0 || cfg.k_max >= n {
        return Err(Error::InvalidArgument(format!("k_max must lie in 1..{n}, got {}", cfg.k_max)));
    }
    if cfg.folds < 2 {
        return Err(Error::InvalidArgument("need at least two folds".into()));
    }
    if !(cfg.holdout_fraction > 0.0 && cfg.holdout_fraction < 1.0) {
        return Err(Error::InvalidArgument("holdout_fraction must lie in (0, 1)".into()));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let hidden_count = ((pairs.len() as f64 * cfg.holdout_fraction).round() as usize).clamp(1, pairs.len());
    let inflate = 1.0 / (1.0 - cfg.holdout_fraction);
    let dense = g.to_dense();
    let eig_cfg = EigenConfig::default();

    let mut totals = vec![0.0; cfg.k_max];
    for _ in 0..cfg.folds {
        let hidden: Vec<(usize, usize)> = sample(rng, pairs.len(), hidden_count)
            .into_iter()
            .map(|idx| pairs[idx])
            .collect();
        let mut observed = &dense * inflate;
        for &(i, j) in &hidden {
            observed[(i, j)] = 0.0;
            observed[(j, i)] = 0.0;
        }
        let eig = top_eigenpairs(&observed, cfg.k_max, &eig_cfg)?;
        let mut recon = vec![0.0; hidden.len()];
        for (k, &lambda) in eig.values.iter().enumerate().take(cfg.k_max) {
            let v = eig.vectors.column(k);
            let mut sse = 0.0;
            for (h, &(i, j)) in hidden.iter().enumerate() {
                recon[h] += lambda * v[i] * v[j];
                let r = dense[(i, j)] - recon[h];
                sse += r * r;
            }
            totals[k] += sse / hidden.len() as f64;
        }
    }
    let cv_errors: Vec<f64> = totals.iter().map(|t| t / cfg.folds as f64).collect();
    let k = argmin_first(&cv_errors) + 1;
    Ok(KSelection { k, cv_errors })
}

/// Index of the smallest value; the first one wins ties.
pub fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Dense reconstruction helper kept for tests and diagnostics.
pub fn low_rank(vectors: &DMatrix<f64>, values: &[f64], k: usize) -> DMatrix<f64> {
    let n = vectors.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (c, &lambda) in values.iter().enumerate().take(k) {
        let v = vectors.column(c);
        out += lambda * (v * v.transpose());
    }
    out
}
