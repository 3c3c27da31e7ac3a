use nalgebra::{DMatrix, DVector};

use super::Graph;
use crate::{Error, Result};

/// Normalized (symmetric) adjacency `D^{-1/2} A D^{-1/2}` in sparse form.
///
/// Rows and columns of isolated nodes are zero.
#[derive(Debug, Clone)]
pub struct Laplacian {
    rows: Vec<Vec<(usize, f64)>>,
}

/// Builds `L = D^{-1/2} A D^{-1/2}`, so `l_ij = a_ij / sqrt(d_i d_j)`.
///
/// Fails with [`Error::IsolatedNode`] on the first zero-degree node unless
/// `allow_isolated` is set.
pub fn normalized_laplacian(g: &Graph, allow_isolated: bool) -> Result<Laplacian> {
    let deg = g.degrees();
    if !allow_isolated {
        if let Some(i) = deg.iter().position(|&d| d == 0) {
            return Err(Error::IsolatedNode(i));
        }
    }
    let inv_sqrt: Vec<f64> = deg
        .iter()
        .map(|&d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() })
        .collect();
    let rows = (0..g.n())
        .map(|i| {
            g.neighbors(i)
                .iter()
                .map(|&j| (j, inv_sqrt[i] * inv_sqrt[j]))
                .collect()
        })
        .collect();
    Ok(Laplacian { rows })
}

impl Laplacian {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// `L x`.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.n(),
            self.rows.iter().map(|row| row.iter().map(|&(j, w)| w * x[j]).sum::<f64>()),
        )
    }

    /// Row `i` as `(column, weight)` pairs.
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut l = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                l[(i, j)] = w;
            }
        }
        l
    }
}
