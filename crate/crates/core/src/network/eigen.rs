//! Leading eigenpairs (by magnitude) of symmetric operators.
//!
//! Small problems go through a dense symmetric eigendecomposition; larger
//! ones use Lanczos with full reorthogonalization, which only needs
//! matrix-vector products and so exploits adjacency sparsity.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Graph;
use crate::{Error, Result};

/// A real symmetric linear operator.
pub trait SymmetricOperator {
    fn dim(&self) -> usize;
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;
    fn to_dense(&self) -> DMatrix<f64>;
}

impl SymmetricOperator for Graph {
    fn dim(&self) -> usize {
        self.n()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.adjacency_mul(x)
    }
    fn to_dense(&self) -> DMatrix<f64> {
        Graph::to_dense(self)
    }
}

impl SymmetricOperator for DMatrix<f64> {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self * x
    }
    fn to_dense(&self) -> DMatrix<f64> {
        self.clone()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigenConfig {
    /// Largest dimension handled by the dense solver.
    pub dense_max_n: usize,
    /// Relative Ritz residual required by Lanczos.
    pub tol: f64,
    /// Lanczos step cap; `None` means `10 n`.
    pub max_iters: Option<usize>,
}

impl Default for EigenConfig {
    fn default() -> Self {
        EigenConfig {
            dense_max_n: 1024,
            tol: 1e-8,
            max_iters: None,
        }
    }
}

/// Eigenvalues ordered by decreasing magnitude with matching unit columns.
#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// The `k` eigenpairs of largest magnitude.
///
/// Ordering is by `|λ|` descending, then signed value descending, then
/// solver index. Each vector is flipped so that its largest-magnitude entry
/// (first one on ties) is positive.
pub fn top_eigenpairs<Op>(op: &Op, k: usize, cfg: &EigenConfig) -> Result<EigenPairs>
where
    Op: SymmetricOperator + ?Sized,
{
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("need 1 <= k <= n, got k = {k}, n = {n}")));
    }
    let (values, vectors) = if n <= cfg.dense_max_n {
        let eig = op.to_dense().symmetric_eigen();
        (eig.eigenvalues.iter().copied().collect::<Vec<_>>(), eig.eigenvectors)
    } else {
        let max_iters = cfg.max_iters.unwrap_or(10 * n);
        lanczos(op, k, cfg.tol, max_iters)?
    };
    let order = magnitude_order(&values);
    let mut out = DMatrix::zeros(n, k);
    let mut vals = Vec::with_capacity(k);
    for (c, &idx) in order.iter().take(k).enumerate() {
        vals.push(values[idx]);
        out.set_column(c, &vectors.column(idx));
    }
    apply_sign_convention(&mut out);
    Ok(EigenPairs {
        values: vals,
        vectors: out,
    })
}

fn magnitude_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .unwrap_or(Ordering::Equal)
            .then(values[b].partial_cmp(&values[a]).unwrap_or(Ordering::Equal))
            .then(a.cmp(&b))
    });
    idx
}

/// Flips each column so that its largest-magnitude entry is positive.
pub fn apply_sign_convention(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let mut best = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[best].abs() {
                best = i;
            }
        }
        if !col.is_empty() && col[best] < 0.0 {
            col.neg_mut();
        }
    }
}

fn lanczos<Op>(op: &Op, k: usize, tol: f64, max_iters: usize) -> Result<(Vec<f64>, DMatrix<f64>)>
where
    Op: SymmetricOperator + ?Sized,
{
    let n = op.dim();
    let cap = max_iters.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a2c_2005);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();

    let mut q = fresh_direction(n, &basis, &mut rng).ok_or(Error::EigConvergenceFailure { iterations: 0 })?;
    let mut prev_beta = 0.0;
    let mut scale = 0.0f64;
    let check_every = 5;

    for step in 0..cap {
        let mut w = op.apply(&q);
        let alpha = q.dot(&w);
        w.axpy(-alpha, &q, 1.0);
        if let Some(prev) = basis.last() {
            w.axpy(-prev_beta, prev, 1.0);
        }
        basis.push(q.clone());
        alphas.push(alpha);
        // two passes of classical Gram-Schmidt against the whole basis
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let beta = w.norm();
        scale = scale.max(alpha.abs()).max(beta);
        let m = basis.len();
        let breakdown = beta <= 1e-12 * scale.max(f64::MIN_POSITIVE);

        let exhausted = m == n;
        if exhausted || (m >= k && !breakdown && (m.is_multiple_of(check_every) || step + 1 == cap)) {
            let (vals, vecs, converged) = ritz(&alphas, &betas, beta, &basis, k, tol);
            if converged || exhausted {
                return Ok((vals, vecs));
            }
        }
        if breakdown {
            // invariant subspace: continue in a fresh orthogonal direction
            match fresh_direction(n, &basis, &mut rng) {
                Some(next) => {
                    betas.push(0.0);
                    prev_beta = 0.0;
                    q = next;
                }
                None => {
                    let (vals, vecs, _) = ritz(&alphas, &betas, 0.0, &basis, k, tol);
                    return Ok((vals, vecs));
                }
            }
        } else {
            betas.push(beta);
            prev_beta = beta;
            q = w / beta;
        }
    }
    Err(Error::EigConvergenceFailure { iterations: cap })
}

/// Ritz pairs from the current tridiagonal matrix, restricted to the `k`
/// of largest magnitude, plus whether all of them meet the residual test.
fn ritz(
    alphas: &[f64],
    betas: &[f64],
    last_beta: f64,
    basis: &[DVector<f64>],
    k: usize,
    tol: f64,
) -> (Vec<f64>, DMatrix<f64>, bool) {
    let m = alphas.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let order = magnitude_order(&values);
    let take = k.min(m);
    let top = values[order[0]].abs().max(f64::MIN_POSITIVE);
    let mut converged = true;
    let n = basis[0].len();
    let mut vecs = DMatrix::zeros(n, take);
    let mut vals = Vec::with_capacity(take);
    for (c, &idx) in order.iter().take(take).enumerate() {
        let s = eig.eigenvectors.column(idx);
        if (last_beta * s[m - 1]).abs() > tol * top {
            converged = false;
        }
        let mut v = DVector::zeros(n);
        for (j, b) in basis.iter().enumerate() {
            v.axpy(s[j], b, 1.0);
        }
        let norm = v.norm();
        vecs.set_column(c, &(v / norm));
        vals.push(values[idx]);
    }
    (vals, vecs, converged && take == k)
}

fn fresh_direction(n: usize, basis: &[DVector<f64>], rng: &mut ChaCha8Rng) -> Option<DVector<f64>> {
    for _ in 0..8 {
        let mut v = DVector::from_fn(n, |_, _| 1.0 + rng.random::<f64>() - 0.5);
        for _ in 0..2 {
            for b in basis {
                let c = b.dot(&v);
                v.axpy(-c, b, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-8 {
            return Some(v / norm);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize) -> Graph {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Graph::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn complete_graph_leading_pair() {
        let edges = vec![(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];
        let g = Graph::from_edges(4, &edges).unwrap();
        let pairs = top_eigenpairs(&g, 1, &EigenConfig::default()).unwrap();
        assert!((pairs.values[0] - 3.0).abs() < 1e-12);
        for i in 0..4 {
            assert!((pairs.vectors[(i, 0)] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn magnitude_ordering_breaks_ties_by_sign() {
        let order = magnitude_order(&[1.0, -3.0, 3.0, 0.5]);
        assert_eq!(order, vec![2, 1, 0, 3]);
    }

    #[test]
    fn sign_convention_first_index_on_ties() {
        let mut m = DMatrix::from_column_slice(3, 1, &[-0.5, 0.5, 0.1]);
        apply_sign_convention(&mut m);
        assert_eq!(m[(0, 0)], 0.5);
    }

    #[test]
    fn lanczos_matches_dense_on_random_symmetric() {
        let n = 120;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        a = &a + a.transpose();
        // plant a few dominant directions
        for c in 0..4 {
            let v = DVector::from_fn(n, |i, _| ((i * (c + 3)) as f64).sin());
            let v = &v / v.norm();
            a += (20.0 - 3.0 * c as f64) * (&v * v.transpose()) * if c == 2 { -1.0 } else { 1.0 };
        }
        let dense = top_eigenpairs(&a, 4, &EigenConfig::default()).unwrap();
        let sparse_cfg = EigenConfig {
            dense_max_n: 0,
            ..EigenConfig::default()
        };
        let lz = top_eigenpairs(&a, 4, &sparse_cfg).unwrap();
        for c in 0..4 {
            assert!((dense.values[c] - lz.values[c]).abs() < 1e-7, "{:?} vs {:?}", dense.values, lz.values);
            let d = (dense.vectors.column(c) - lz.vectors.column(c)).amax();
            assert!(d < 1e-5, "column {c} differs by {d}");
        }
        let gram = lz.vectors.transpose() * &lz.vectors;
        assert!((gram - DMatrix::identity(4, 4)).amax() < 1e-10);
    }

    #[test]
    fn lanczos_on_sparse_graph() {
        let g = ring(1500);
        let lz = top_eigenpairs(&g, 1, &EigenConfig::default()).unwrap();
        assert!((lz.values[0].abs() - 2.0).abs() < 1e-6);
    }

    #[test]
    fn lanczos_reports_nonconvergence() {
        let n = 300;
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut a = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
        a = &a + a.transpose();
        let cfg = EigenConfig {
            dense_max_n: 0,
            tol: 1e-14,
            max_iters: Some(6),
        };
        assert!(matches!(
            top_eigenpairs(&a, 3, &cfg),
            Err(Error::EigConvergenceFailure { iterations: 6 })
        ));
    }
}
