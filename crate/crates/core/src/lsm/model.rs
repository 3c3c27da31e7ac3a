use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::network::{sample_graph, Graph, IsolatedPolicy};
use crate::{Error, Result};

/// Latent positions `X = [Q | v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LsmState {
    /// `N x K` multiplicative factors.
    pub q: DMatrix<f64>,
    /// Additive degree effects.
    pub v: DVector<f64>,
}

/// How far a state is from the constraint set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintResiduals {
    /// Largest absolute column sum of `Q`.
    pub centering: f64,
    /// Largest off-diagonal entry of `Q'Q` relative to its trace.
    pub orthogonality: f64,
    /// Largest row norm of `[Q | v]`.
    pub max_row_norm: f64,
}

impl LsmState {
    pub fn new(q: DMatrix<f64>, v: DVector<f64>) -> Result<Self> {
        if q.nrows() != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "q has {} rows but v has {} entries",
                q.nrows(),
                v.len()
            )));
        }
        Ok(LsmState { q, v })
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn k(&self) -> usize {
        self.q.ncols()
    }

    /// `χ = QQ' + v1' + 1v'` (diagonal included).
    pub fn chi(&self) -> DMatrix<f64> {
        let mut chi = &self.q * self.q.transpose();
        let n = self.n();
        for j in 0..n {
            for i in 0..n {
                chi[(i, j)] += self.v[i] + self.v[j];
            }
        }
        chi
    }

    /// `[Q | v]` as an `N x (K+1)` matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let mut x = self.q.clone().insert_column(self.k(), 0.0);
        x.set_column(self.k(), &self.v);
        x
    }

    pub fn from_matrix(x: &DMatrix<f64>) -> Result<Self> {
        if x.ncols() < 2 {
            return Err(Error::DimensionMismatch("latent matrix needs K >= 1 plus the v column".into()));
        }
        let k = x.ncols() - 1;
        LsmState::new(x.columns(0, k).into_owned(), x.column(k).into_owned())
    }

    pub fn residuals(&self) -> ConstraintResiduals {
        let centering = self.q.row_sum().amax();
        let gram = self.q.transpose() * &self.q;
        let trace = gram.trace();
        let mut off: f64 = 0.0;
        for i in 0..self.k() {
            for j in 0..self.k() {
                if i != j {
                    off = off.max(gram[(i, j)].abs());
                }
            }
        }
        let orthogonality = if trace > 0.0 { off / trace } else { 0.0 };
        ConstraintResiduals {
            centering,
            orthogonality,
            max_row_norm: max_row_norm(&self.q, &self.v),
        }
    }
}

fn max_row_norm(q: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (0..v.len())
        .map(|i| (q.row(i).norm_squared() + v[i] * v[i]).sqrt())
        .fold(0.0, f64::max)
}

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_size(state: &LsmState, g: &Graph) -> Result<()> {
    if state.n() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "latent state has {} nodes, graph has {}",
            state.n(),
            g.n()
        )));
    }
    Ok(())
}

/// Logistic log-likelihood `Σ_{i<j} a_ij χ_ij - log(1 + e^{χ_ij})`.
pub fn lsm_loglik(state: &LsmState, g: &Graph) -> Result<f64> {
    check_size(state, g)?;
    let gram = &state.q * state.q.transpose();
    let n = state.n();
    let mut total = 0.0;
    for i in 0..n {
        let nbrs = g.neighbors(i);
        let mut row = 0.0;
        for j in (i + 1)..n {
            let chi = gram[(i, j)] + state.v[i] + state.v[j];
            row -= softplus(chi);
        }
        for &j in nbrs.iter().filter(|&&j| j > i) {
            row += gram[(i, j)] + state.v[i] + state.v[j];
        }
        total += row;
    }
    Ok(total)
}

/// Gradient of [`lsm_loglik`]: with `R = A - σ(χ)` off the diagonal and zero
/// on it, `∂l/∂Q = R Q` and `∂l/∂v = R 1`.
pub fn lsm_gradient(state: &LsmState, g: &Graph) -> Result<(DMatrix<f64>, DVector<f64>)> {
    check_size(state, g)?;
    let n = state.n();
    let gram = &state.q * state.q.transpose();
    let mut r = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            if i != j {
                r[(i, j)] = -sigmoid(gram[(i, j)] + state.v[i] + state.v[j]);
            }
        }
    }
    for i in 0..n {
        for &j in g.neighbors(i) {
            r[(i, j)] += 1.0;
        }
    }
    let dq = &r * &state.q;
    let dv = DVector::from_iterator(n, (0..n).map(|i| r.row(i).sum()));
    Ok((dq, dv))
}

/// Maps a state into the constraint set.
///
/// Columns of `Q` are centered with the compensating shift to `v` that
/// keeps `χ` unchanged; rows of `[Q | v]` longer than `row_norm_cap` are
/// shrunk onto the cap; the two steps alternate until both hold, and `Q` is
/// finally rotated onto the eigenvectors of `Q'Q` (descending eigenvalues,
/// largest-magnitude entry of each eigenvector positive).
pub fn project_constraints(state: &LsmState, row_norm_cap: f64) -> LsmState {
    let n = state.n();
    let k = state.k();
    let mut q = state.q.clone();
    let mut v = state.v.clone();
    if n == 0 {
        return state.clone();
    }
    for _ in 0..100 {
        let m: DVector<f64> = q.row_sum().transpose() / n as f64;
        let shift = &q * &m - DVector::repeat(n, 0.5 * m.norm_squared());
        v += shift;
        for j in 0..k {
            q.column_mut(j).add_scalar_mut(-m[j]);
        }
        let mut capped = false;
        for i in 0..n {
            let norm = (q.row(i).norm_squared() + v[i] * v[i]).sqrt();
            if norm > row_norm_cap {
                let f = row_norm_cap / norm;
                q.row_mut(i).scale_mut(f);
                v[i] *= f;
                capped = true;
            }
        }
        if !capped {
            break;
        }
        let scale = q.amax().max(1.0);
        if q.row_sum().amax() <= 1e-12 * scale * n as f64 {
            break;
        }
    }
    if k > 0 {
        let eig = SymmetricEigen::new(q.transpose() * &q);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let mut rot = DMatrix::zeros(k, k);
        for (dst, &src) in order.iter().enumerate() {
            let mut col = eig.eigenvectors.column(src).into_owned();
            let lead = col.iamax();
            if col[lead] < 0.0 {
                col.neg_mut();
            }
            rot.set_column(dst, &col);
        }
        q *= rot;
    }
    LsmState { q, v }
}

/// Draws a planted state: `Q` rows iid `N(0, scale² I_K)`, `v_i` iid
/// `N(offset, 1/4)`, then projected with a loose cap.
pub fn planted_lsm<R: Rng + ?Sized>(n: usize, k: usize, scale: f64, offset: f64, rng: &mut R) -> LsmState {
    let q = DMatrix::from_fn(n, k, |_, _| {
        let e: f64 = StandardNormal.sample(rng);
        scale * e
    });
    let v = DVector::from_fn(n, |_, _| {
        let e: f64 = StandardNormal.sample(rng);
        offset + 0.5 * e
    });
    project_constraints(&LsmState { q, v }, f64::INFINITY)
}

/// Bernoulli graph with `p_ij = σ(χ_ij)`.
pub fn sample_lsm_graph<R: Rng + ?Sized>(
    state: &LsmState,
    policy: IsolatedPolicy,
    rng: &mut R,
) -> Result<(Graph, usize)> {
    let mut p = state.chi();
    p.apply(|x| *x = sigmoid(*x));
    p.fill_diagonal(0.0);
    sample_graph(&p, policy, rng)
}
