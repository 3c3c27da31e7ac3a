use nalgebra::DMatrix;

use super::eigen::{top_eigenpairs, EigenConfig, SymmetricOperator};
use super::Graph;
use crate::Result;

/// Leading eigenvectors of a symmetric matrix, ordered by decreasing
/// eigenvalue magnitude, with orthonormal columns.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub vectors: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
}

impl Embedding {
    pub fn k(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn n(&self) -> usize {
        self.vectors.nrows()
    }
}

/// Adjacency spectral embedding of `g` into `k` dimensions.
pub fn spectral_embed(g: &Graph, k: usize) -> Result<Embedding> {
    spectral_embed_with(g, k, &EigenConfig::default())
}

/// Spectral embedding of any symmetric operator, e.g. a population
/// connection matrix `P`.
pub fn spectral_embed_with<Op>(op: &Op, k: usize, cfg: &EigenConfig) -> Result<Embedding>
where
    Op: SymmetricOperator + ?Sized,
{
    let pairs = top_eigenpairs(op, k, cfg)?;
    Ok(Embedding {
        vectors: pairs.vectors,
        eigenvalues: pairs.values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    #[test]
    fn rank_one_input_recovers_direction() {
        let x = DVector::from_vec(vec![0.2, 0.5, 0.9, 0.4, 0.7]);
        let p = (&x * x.transpose()) * 0.8;
        let emb = spectral_embed_with(&p, 1, &EigenConfig::default()).unwrap();
        let u = x.normalize();
        assert!((emb.vectors.column(0) - &u).amax() < 1e-12);
        assert!((emb.eigenvalues[0] - 0.8 * x.norm_squared()).abs() < 1e-12);
    }

    #[test]
    fn columns_are_orthonormal() {
        let edges: Vec<_> = (0..30)
            .flat_map(|i| [(i, (i + 1) % 30), (i, (i + 7) % 30)])
            .collect();
        let g = Graph::from_edges(30, &edges).unwrap();
        let emb = spectral_embed(&g, 4).unwrap();
        let gram = emb.vectors.transpose() * &emb.vectors;
        assert!((gram - DMatrix::identity(4, 4)).amax() < 1e-10);
        let mags: Vec<f64> = emb.eigenvalues.iter().map(|v| v.abs()).collect();
        assert!(mags.windows(2).all(|w| w[0] >= w[1]));
    }
}
