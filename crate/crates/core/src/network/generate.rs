//! Latent-variable graph generators: random dot product graphs and
//! degree-corrected (mixed-membership) stochastic block models.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, LogNormal};

use super::Graph;
use crate::{Error, Result};

/// Slack allowed on `ρ x_i'x_j ≤ 1` before a probability counts as invalid.
const PROB_SLACK: f64 = 1e-12;

/// Parameters of a latent-variable random graph.
#[derive(Debug, Clone, PartialEq)]
pub enum LatentGraphSpec {
    /// `a_ij ~ Bernoulli(rho * x_i'x_j)` for `i != j`.
    Rdpg { positions: DMatrix<f64>, rho: f64 },
    /// Degree-corrected SBM with one block per node.
    Dcsbm {
        block: DMatrix<f64>,
        memberships: Vec<usize>,
        degrees: Vec<f64>,
        max_expected_degree: f64,
    },
    /// Degree-corrected mixed-membership SBM; membership rows lie on the simplex.
    Dcmmsbm {
        block: DMatrix<f64>,
        memberships: DMatrix<f64>,
        degrees: Vec<f64>,
        max_expected_degree: f64,
    },
}

/// Population connection matrix `P = E[A]` (hollow).
#[derive(Debug, Clone)]
pub struct Connection {
    pub p: DMatrix<f64>,
    /// Largest off-diagonal row sum after degree rescaling, before clipping.
    pub max_row_sum: f64,
    /// Number of pairs `i < j` clipped down to probability 1.
    pub clipped: usize,
}

/// What to do when a sampled graph has zero-degree nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IsolatedPolicy {
    /// Redraw the whole graph, giving up after `max_attempts` draws.
    Resample { max_attempts: usize },
    /// Keep the draw as is.
    Allow,
}

impl Default for IsolatedPolicy {
    fn default() -> Self {
        IsolatedPolicy::Resample { max_attempts: 100 }
    }
}

/// A sampled graph with its population.
#[derive(Debug, Clone)]
pub struct Generated {
    pub graph: Graph,
    pub connection: Connection,
    pub attempts: usize,
}

impl LatentGraphSpec {
    pub fn n(&self) -> usize {
        match self {
            LatentGraphSpec::Rdpg { positions, .. } => positions.nrows(),
            LatentGraphSpec::Dcsbm { memberships, .. } => memberships.len(),
            LatentGraphSpec::Dcmmsbm { memberships, .. } => memberships.nrows(),
        }
    }

    /// Latent dimension `K`.
    pub fn k(&self) -> usize {
        match self {
            LatentGraphSpec::Rdpg { positions, .. } => positions.ncols(),
            LatentGraphSpec::Dcsbm { block, .. } | LatentGraphSpec::Dcmmsbm { block, .. } => block.nrows(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            LatentGraphSpec::Rdpg { positions, rho } => {
                if !(*rho > 0.0 && *rho <= 1.0) {
                    return Err(Error::InvalidSpec(format!("rho = {rho} is outside (0, 1]")));
                }
                if positions.iter().any(|v| !v.is_finite()) {
                    return Err(Error::InvalidSpec("latent positions must be finite".into()));
                }
                let gram = positions * positions.transpose();
                let n = positions.nrows();
                for i in 0..n {
                    for j in (i + 1)..n {
                        let p = rho * gram[(i, j)];
                        if !(-PROB_SLACK..=1.0 + PROB_SLACK).contains(&p) {
                            return Err(Error::InvalidProbability { i, j, p });
                        }
                    }
                }
                Ok(())
            }
            LatentGraphSpec::Dcsbm {
                block,
                memberships,
                degrees,
                max_expected_degree,
            } => {
                check_block(block)?;
                check_degrees(degrees, memberships.len(), *max_expected_degree)?;
                if let Some(i) = memberships.iter().position(|&b| b >= block.nrows()) {
                    return Err(Error::InvalidSpec(format!(
                        "node {i} is assigned to block {} of {}",
                        memberships[i],
                        block.nrows()
                    )));
                }
                Ok(())
            }
            LatentGraphSpec::Dcmmsbm {
                block,
                memberships,
                degrees,
                max_expected_degree,
            } => {
                check_block(block)?;
                check_degrees(degrees, memberships.nrows(), *max_expected_degree)?;
                if memberships.ncols() != block.nrows() {
                    return Err(Error::InvalidSpec(format!(
                        "memberships have {} columns for {} blocks",
                        memberships.ncols(),
                        block.nrows()
                    )));
                }
                for (i, row) in memberships.row_iter().enumerate() {
                    let sum: f64 = row.iter().sum();
                    if row.iter().any(|&v| v < 0.0 || !v.is_finite()) || (sum - 1.0).abs() > 1e-12 {
                        return Err(Error::InvalidSpec(format!("membership row {i} is not on the simplex")));
                    }
                }
                Ok(())
            }
        }
    }

    /// Hollow connection matrix. Block-model variants are rescaled so that
    /// the largest expected degree equals `max_expected_degree`, then clipped
    /// to `[0, 1]`.
    pub fn connection_matrix(&self) -> Result<Connection> {
        self.validate()?;
        match self {
            LatentGraphSpec::Rdpg { positions, rho } => {
                let mut p = positions * positions.transpose() * *rho;
                p.fill_diagonal(0.0);
                p.apply(|v| *v = v.clamp(0.0, 1.0));
                let max_row_sum = max_row_sum(&p);
                Ok(Connection {
                    p,
                    max_row_sum,
                    clipped: 0,
                })
            }
            LatentGraphSpec::Dcsbm {
                block,
                memberships,
                degrees,
                max_expected_degree,
            } => {
                let k = block.nrows();
                let mut m = DMatrix::zeros(memberships.len(), k);
                for (i, &b) in memberships.iter().enumerate() {
                    m[(i, b)] = 1.0;
                }
                Ok(block_connection(block, &m, degrees, *max_expected_degree))
            }
            LatentGraphSpec::Dcmmsbm {
                block,
                memberships,
                degrees,
                max_expected_degree,
            } => Ok(block_connection(block, memberships, degrees, *max_expected_degree)),
        }
    }

    /// Draws a graph from this population.
    pub fn generate<R: Rng + ?Sized>(&self, policy: IsolatedPolicy, rng: &mut R) -> Result<Generated> {
        let connection = self.connection_matrix()?;
        let (graph, attempts) = sample_graph(&connection.p, policy, rng)?;
        Ok(Generated {
            graph,
            connection,
            attempts,
        })
    }
}

fn check_block(block: &DMatrix<f64>) -> Result<()> {
    let k = block.nrows();
    if k == 0 || block.ncols() != k {
        return Err(Error::InvalidSpec("block matrix must be square and nonempty".into()));
    }
    for i in 0..k {
        for j in 0..k {
            let v = block[(i, j)];
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidSpec(format!("block entry ({i}, {j}) = {v} is negative")));
            }
            if v != block[(j, i)] {
                return Err(Error::InvalidSpec("block matrix must be symmetric".into()));
            }
        }
    }
    Ok(())
}

fn check_degrees(degrees: &[f64], n: usize, max_expected_degree: f64) -> Result<()> {
    if degrees.len() != n {
        return Err(Error::InvalidSpec(format!("{} degree parameters for {n} nodes", degrees.len())));
    }
    if let Some(i) = degrees.iter().position(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(Error::InvalidSpec(format!("degree parameter {i} must be positive")));
    }
    if !(max_expected_degree > 0.0 && max_expected_degree.is_finite()) {
        return Err(Error::InvalidSpec("max_expected_degree must be positive".into()));
    }
    Ok(())
}

fn max_row_sum(p: &DMatrix<f64>) -> f64 {
    p.row_iter().map(|r| r.sum()).fold(0.0, f64::max)
}

fn block_connection(block: &DMatrix<f64>, m: &DMatrix<f64>, degrees: &[f64], target: f64) -> Connection {
    let n = m.nrows();
    let mb = m * block;
    let mut p = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let v = mb.row(i).dot(&m.row(j)) * degrees[i] * degrees[j];
            p[(i, j)] = v;
            p[(j, i)] = v;
        }
    }
    let raw_max = max_row_sum(&p);
    if raw_max > 0.0 {
        p *= target / raw_max;
    }
    let max_row_sum = max_row_sum(&p);
    let mut clipped = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            if p[(i, j)] > 1.0 {
                p[(i, j)] = 1.0;
                p[(j, i)] = 1.0;
                clipped += 1;
            }
        }
    }
    if clipped > 0 {
        log::warn!("clipped {clipped} connection probabilities to 1");
    }
    Connection {
        p,
        max_row_sum,
        clipped,
    }
}

/// Independent Bernoulli draws for every pair `i < j`, mirrored to keep the
/// adjacency symmetric. `p` is read above the diagonal only.
pub fn sample_graph<R: Rng + ?Sized>(
    p: &DMatrix<f64>,
    policy: IsolatedPolicy,
    rng: &mut R,
) -> Result<(Graph, usize)> {
    let max_attempts = match policy {
        IsolatedPolicy::Resample { max_attempts } => max_attempts.max(1),
        IsolatedPolicy::Allow => 1,
    };
    for attempt in 1..=max_attempts {
        let g = bernoulli_draw(p, rng);
        if policy == IsolatedPolicy::Allow || g.isolated_nodes().is_empty() {
            return Ok((g, attempt));
        }
    }
    Err(Error::IsolationRetriesExceeded {
        attempts: max_attempts,
    })
}

fn bernoulli_draw<R: Rng + ?Sized>(p: &DMatrix<f64>, rng: &mut R) -> Graph {
    let n = p.nrows();
    let mut neighbors = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p[(i, j)] {
                neighbors[i].push(j);
                neighbors[j].push(i);
            }
        }
    }
    // j > i pushes land in order; the j < i pushes arrive in increasing i as well.
    for list in &mut neighbors {
        list.sort_unstable();
    }
    Graph::from_sorted_neighbors(neighbors)
}

/// `2q I_K + q 1_K 1_K'`: within-block connectivity is three times the
/// between-block connectivity.
pub fn assortative_block_matrix(k: usize, q: f64) -> DMatrix<f64> {
    DMatrix::from_fn(k, k, |i, j| if i == j { 3.0 * q } else { q })
}

fn lognormal_degrees<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    let d = LogNormal::new(0.0, 1.0).expect("standard log-normal");
    (0..n).map(|_| d.sample(rng)).collect()
}

/// Draws a DCSBM population: standard log-normal degree parameters and
/// equiprobable categorical block labels.
pub fn draw_dcsbm<R: Rng + ?Sized>(
    n: usize,
    block: DMatrix<f64>,
    max_expected_degree: f64,
    rng: &mut R,
) -> LatentGraphSpec {
    let k = block.nrows();
    let degrees = lognormal_degrees(n, rng);
    let memberships = (0..n).map(|_| rng.random_range(0..k)).collect();
    LatentGraphSpec::Dcsbm {
        block,
        memberships,
        degrees,
        max_expected_degree,
    }
}

/// Draws a DCMMSBM population: standard log-normal degree parameters and
/// Dirichlet(1, ..., 1) memberships.
pub fn draw_dcmmsbm<R: Rng + ?Sized>(
    n: usize,
    block: DMatrix<f64>,
    max_expected_degree: f64,
    rng: &mut R,
) -> LatentGraphSpec {
    let k = block.nrows();
    let degrees = lognormal_degrees(n, rng);
    let memberships = flat_dirichlet(n, k, rng);
    LatentGraphSpec::Dcmmsbm {
        block,
        memberships,
        degrees,
        max_expected_degree,
    }
}

/// Draws RDPG latent positions as Dirichlet(1, ..., 1) rows, so every inner
/// product lies in `[0, 1]`.
pub fn draw_rdpg<R: Rng + ?Sized>(n: usize, k: usize, rho: f64, rng: &mut R) -> LatentGraphSpec {
    LatentGraphSpec::Rdpg {
        positions: flat_dirichlet(n, k, rng),
        rho,
    }
}

/// Rows drawn from the flat Dirichlet via normalized unit exponentials.
fn flat_dirichlet<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, k);
    for i in 0..n {
        let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        for (j, d) in draws.into_iter().enumerate() {
            m[(i, j)] = d / total;
        }
        // pin the row sum to 1 up to a single rounding
        let s: f64 = m.row(i).sum();
        let big = m.row(i).transpose().iamax();
        m[(i, big)] += 1.0 - s;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn check_graph(g: &Graph) {
        let a = g.to_dense();
        assert_eq!(a, a.transpose());
        for i in 0..g.n() {
            assert_eq!(a[(i, i)], 0.0);
        }
        assert!(a.iter().all(|&v| v == 0.0 || v == 1.0));
    }

    #[test]
    fn unit_positions_give_complete_graph() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = LatentGraphSpec::Rdpg {
            positions: DMatrix::from_element(6, 1, 1.0),
            rho: 1.0,
        };
        let out = spec.generate(IsolatedPolicy::default(), &mut rng).unwrap();
        check_graph(&out.graph);
        assert_eq!(out.graph.edge_count(), 15);
    }

    #[test]
    fn zero_positions_exhaust_retries() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let spec = LatentGraphSpec::Rdpg {
            positions: DMatrix::zeros(5, 2),
            rho: 0.5,
        };
        assert!(matches!(
            spec.generate(IsolatedPolicy::default(), &mut rng),
            Err(Error::IsolationRetriesExceeded { attempts: 100 })
        ));
        let g = spec.generate(IsolatedPolicy::Allow, &mut rng).unwrap().graph;
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn rdpg_rejects_probabilities_above_one() {
        let spec = LatentGraphSpec::Rdpg {
            positions: DMatrix::from_element(3, 1, 2.0),
            rho: 0.5,
        };
        assert!(matches!(spec.validate(), Err(Error::InvalidProbability { i: 0, j: 1, .. })));
        let spec = LatentGraphSpec::Rdpg {
            positions: DMatrix::from_element(3, 1, 1.0),
            rho: 1.5,
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn rdpg_edge_density_concentrates() {
        // p = 0.5 * (1/2 + 1/2) = 0.5 on every pair
        let n = 1000;
        let h = 0.5f64.sqrt();
        let spec = LatentGraphSpec::Rdpg {
            positions: DMatrix::from_element(n, 2, h),
            rho: 0.5,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let g = spec.generate(IsolatedPolicy::default(), &mut rng).unwrap().graph;
        check_graph(&g);
        let pairs = (n * (n - 1) / 2) as f64;
        let se = (0.25 / pairs).sqrt();
        assert!((g.density() - 0.5).abs() < 3.0 * se, "density {}", g.density());
    }

    #[test]
    fn single_block_complete_graph() {
        let n = 8;
        let spec = LatentGraphSpec::Dcsbm {
            block: DMatrix::from_element(1, 1, 1.0),
            memberships: vec![0; n],
            degrees: vec![1.0; n],
            max_expected_degree: (n - 1) as f64,
        };
        let conn = spec.connection_matrix().unwrap();
        for i in 0..n {
            for j in 0..n {
                assert_eq!(conn.p[(i, j)], if i == j { 0.0 } else { 1.0 });
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(spec.generate(IsolatedPolicy::default(), &mut rng).unwrap().graph.edge_count(), 28);
    }

    #[test]
    fn assortative_block_ratio_is_three() {
        let b = assortative_block_matrix(3, 9.0 / 40.0);
        assert!((b[(0, 0)] / b[(0, 1)] - 3.0).abs() < 1e-15);
        assert!((b[(1, 1)] - 27.0 / 40.0).abs() < 1e-15);
    }

    #[test]
    fn rescaling_pins_max_expected_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for spec in [
            draw_dcsbm(150, assortative_block_matrix(3, 9.0 / 40.0), 12.0, &mut rng),
            draw_dcmmsbm(150, assortative_block_matrix(3, 9.0 / 40.0), 12.0, &mut rng),
        ] {
            let conn = spec.connection_matrix().unwrap();
            assert!((conn.max_row_sum - 12.0).abs() < 1e-9);
            assert!(conn.p.iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert_eq!(conn.p, conn.p.transpose());
        }
    }

    #[test]
    fn dcsbm_within_between_ratio() {
        // equal degrees and two equal blocks: within/between density ratio 3
        let n = 2000;
        let block = assortative_block_matrix(2, 9.0 / 40.0);
        let memberships: Vec<usize> = (0..n).map(|i| i % 2).collect();
        let spec = LatentGraphSpec::Dcsbm {
            block,
            memberships: memberships.clone(),
            degrees: vec![1.0; n],
            max_expected_degree: 100.0,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = spec.generate(IsolatedPolicy::default(), &mut rng).unwrap().graph;
        check_graph(&g);
        let (mut within, mut between) = (0usize, 0usize);
        for (i, j) in g.edges() {
            if memberships[i] == memberships[j] {
                within += 1;
            } else {
                between += 1;
            }
        }
        let half = n / 2;
        let within_pairs = 2 * half * (half - 1) / 2;
        let between_pairs = half * half;
        let ratio = (within as f64 / within_pairs as f64) / (between as f64 / between_pairs as f64);
        assert!((ratio - 3.0).abs() < 0.3, "ratio {ratio}");
    }

    #[test]
    fn dcmmsbm_membership_validation() {
        let spec = LatentGraphSpec::Dcmmsbm {
            block: DMatrix::identity(2, 2),
            memberships: DMatrix::from_row_slice(2, 2, &[0.5, 0.6, 1.0, 0.0]),
            degrees: vec![1.0, 1.0],
            max_expected_degree: 1.0,
        };
        assert!(spec.validate().is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let spec = draw_dcmmsbm(50, assortative_block_matrix(3, 0.2), 5.0, &mut rng);
        spec.validate().unwrap();
    }

    #[test]
    fn negative_block_entries_rejected() {
        let spec = LatentGraphSpec::Dcsbm {
            block: DMatrix::from_row_slice(2, 2, &[1.0, -0.1, -0.1, 1.0]),
            memberships: vec![0, 1],
            degrees: vec![1.0, 1.0],
            max_expected_degree: 1.0,
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let spec = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            draw_dcmmsbm(80, assortative_block_matrix(3, 9.0 / 40.0), 9.0, &mut rng)
        };
        let a = spec
            .generate(IsolatedPolicy::Allow, &mut ChaCha8Rng::seed_from_u64(4))
            .unwrap();
        let b = spec
            .generate(IsolatedPolicy::Allow, &mut ChaCha8Rng::seed_from_u64(4))
            .unwrap();
        assert_eq!(a.graph, b.graph);
    }
}
