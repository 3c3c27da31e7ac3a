use nalgebra::{DMatrix, DVector};

/// Householder QR with column pivoting by largest remaining column norm,
/// `W P = Q R`.
pub(crate) struct PivotedQr {
    /// Householder vectors (unit-normalized, one per column).
    reflectors: Vec<DVector<f64>>,
    r: DMatrix<f64>,
    /// `perm[j]` is the original index of pivoted column `j`.
    perm: Vec<usize>,
}

impl PivotedQr {
    pub fn new(w: &DMatrix<f64>) -> Self {
        let (m, d) = w.shape();
        let steps = m.min(d);
        let mut a = w.clone();
        let mut perm: Vec<usize> = (0..d).collect();
        let mut reflectors = Vec::with_capacity(steps);
        for j in 0..steps {
            let pivot = (j..d)
                .max_by(|&x, &y| {
                    let nx = a.view((j, x), (m - j, 1)).norm_squared();
                    let ny = a.view((j, y), (m - j, 1)).norm_squared();
                    nx.total_cmp(&ny).then(y.cmp(&x))
                })
                .unwrap_or(j);
            a.swap_columns(j, pivot);
            perm.swap(j, pivot);
            let x = a.view((j, j), (m - j, 1)).into_owned();
            let norm = x.norm();
            let mut v = DVector::from_column_slice(x.as_slice());
            if norm == 0.0 {
                reflectors.push(DVector::zeros(m - j));
                continue;
            }
            let alpha = if x[0] >= 0.0 { -norm } else { norm };
            v[0] -= alpha;
            let vnorm = v.norm();
            v /= vnorm;
            for c in j..d {
                let mut col = a.column_mut(c);
                let mut col = col.rows_mut(j, m - j);
                let dot = v.dot(&col);
                col.axpy(-2.0 * dot, &v, 1.0);
            }
            reflectors.push(v);
        }
        let r = a.rows(0, steps).upper_triangle();
        PivotedQr { reflectors, r, perm }
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    /// Pivoted columns whose `|R_jj|` falls at or below `rel_tol |R_00|`,
    /// reported by original index.
    pub fn deficient_columns(&self, rel_tol: f64) -> Vec<usize> {
        let d = self.perm.len();
        let steps = self.r.nrows();
        let lead = if steps > 0 { self.r[(0, 0)].abs() } else { 0.0 };
        let mut out: Vec<usize> = (0..d)
            .filter(|&j| j >= steps || lead == 0.0 || self.r[(j, j)].abs() <= rel_tol * lead)
            .map(|j| self.perm[j])
            .collect();
        out.sort_unstable();
        out
    }

    /// `Q' y`.
    pub fn qt_mul(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = y.clone();
        for (j, v) in self.reflectors.iter().enumerate() {
            let mut seg = out.rows_mut(j, v.len());
            let dot = v.dot(&seg);
            seg.axpy(-2.0 * dot, v, 1.0);
        }
        out
    }

    /// Square `d x d` upper-triangular factor (requires `m >= d`).
    pub fn r(&self) -> &DMatrix<f64> {
        &self.r
    }

    /// Least-squares solution in the original column order.
    pub fn solve(&self, y: &DVector<f64>) -> Option<DVector<f64>> {
        let d = self.perm.len();
        let qty = self.qt_mul(y);
        let z = self.r.solve_upper_triangular(&qty.rows(0, d).into_owned())?;
        let mut out = DVector::zeros(d);
        for (j, &orig) in self.perm.iter().enumerate() {
            out[orig] = z[j];
        }
        Some(out)
    }

    /// `(W'W)^{-1} = P R^{-1} R^{-T} P'`.
    pub fn gram_inverse(&self) -> Option<DMatrix<f64>> {
        let d = self.perm.len();
        let rinv = self.r.solve_upper_triangular(&DMatrix::identity(d, d))?;
        let pivoted = &rinv * rinv.transpose();
        let mut out = DMatrix::zeros(d, d);
        for (a, &ia) in self.perm.iter().enumerate() {
            for (b, &ib) in self.perm.iter().enumerate() {
                out[(ia, ib)] = pivoted[(a, b)];
            }
        }
        Some(out)
    }
}
