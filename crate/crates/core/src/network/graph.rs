use nalgebra::{DMatrix, DVector};

use crate::{Error, Result};

/// Simple undirected graph on nodes `0..n`, stored as sorted neighbour lists.
///
/// The adjacency matrix is symmetric, 0/1 valued and hollow by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    neighbors: Vec<Vec<usize>>,
    edge_count: usize,
}

impl Graph {
    /// Graph with `n` nodes and no edges.
    pub fn empty(n: usize) -> Self {
        Graph {
            neighbors: vec![Vec::new(); n],
            edge_count: 0,
        }
    }

    /// Builds a graph from an undirected edge list.
    ///
    /// Each edge must appear once; self-loops, duplicates (in either
    /// orientation) and out-of-range endpoints are rejected with the index of
    /// the offending entry.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Graph::empty(n);
        for (row, &(a, b)) in edges.iter().enumerate() {
            if a >= n || b >= n {
                return Err(Error::InvalidArgument(format!(
                    "edge {row} ({a}, {b}) references a node outside 0..{n}"
                )));
            }
            if a == b {
                return Err(Error::InvalidArgument(format!("edge {row} is a self-loop on node {a}")));
            }
            if g.neighbors[a].contains(&b) {
                return Err(Error::InvalidArgument(format!("edge {row} ({a}, {b}) is a duplicate")));
            }
            g.neighbors[a].push(b);
            g.neighbors[b].push(a);
            g.edge_count += 1;
        }
        for list in &mut g.neighbors {
            list.sort_unstable();
        }
        Ok(g)
    }

    /// Builds a graph from a dense adjacency matrix, validating symmetry,
    /// hollowness and 0/1 entries.
    pub fn from_adjacency(a: &DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "adjacency must be square, got {}x{}",
                n,
                a.ncols()
            )));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            if a[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument(format!("nonzero diagonal at node {i}")));
            }
            for j in (i + 1)..n {
                let v = a[(i, j)];
                if v != a[(j, i)] {
                    return Err(Error::InvalidArgument(format!("asymmetric entry at ({i}, {j})")));
                }
                if v == 1.0 {
                    edges.push((i, j));
                } else if v != 0.0 {
                    return Err(Error::InvalidArgument(format!("entry {v} at ({i}, {j}) is not 0/1")));
                }
            }
        }
        Graph::from_edges(n, &edges)
    }

    /// Internal constructor for samplers that already produce sorted,
    /// symmetric, loop-free neighbour lists.
    pub(crate) fn from_sorted_neighbors(neighbors: Vec<Vec<usize>>) -> Self {
        let edge_count = neighbors.iter().map(Vec::len).sum::<usize>() / 2;
        Graph {
            neighbors,
            edge_count,
        }
    }

    pub fn n(&self) -> usize {
        self.neighbors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.neighbors.iter().map(Vec::len).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors[i].binary_search(&j).is_ok()
    }

    /// Nodes with no neighbours.
    pub fn isolated_nodes(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.neighbors[i].is_empty()).collect()
    }

    /// Fraction of the `n(n-1)/2` node pairs that are connected.
    pub fn density(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        self.edge_count as f64 / (n * (n - 1) / 2) as f64
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count);
        for (i, list) in self.neighbors.iter().enumerate() {
            out.extend(list.iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut a = DMatrix::zeros(n, n);
        for (i, list) in self.neighbors.iter().enumerate() {
            for &j in list {
                a[(i, j)] = 1.0;
            }
        }
        a
    }

    /// `A x` without materializing `A`.
    pub fn adjacency_mul(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.n(),
            self.neighbors.iter().map(|list| list.iter().map(|&j| x[j]).sum::<f64>()),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert!(matches!(
            Graph::from_edges(3, &[(0, 1), (1, 1)]),
            Err(Error::InvalidArgument(msg)) if msg.contains("edge 1")
        ));
        assert!(Graph::from_edges(3, &[(0, 1), (1, 0)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 3)]).is_err());
    }

    #[test]
    fn dense_round_trip_is_symmetric_and_hollow() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let a = g.to_dense();
        assert_eq!(a, a.transpose());
        assert!((0..4).all(|i| a[(i, i)] == 0.0));
        assert_eq!(Graph::from_adjacency(&a).unwrap(), g);
        assert_eq!(g.edges(), vec![(0, 1), (0, 3), (1, 2), (2, 3)]);
        assert!((g.density() - 4.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn adjacency_rejects_weights() {
        let mut a = DMatrix::zeros(2, 2);
        a[(0, 1)] = 0.5;
        a[(1, 0)] = 0.5;
        assert!(Graph::from_adjacency(&a).is_err());
    }
}
