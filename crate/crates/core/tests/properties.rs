use enarkit::bench::{derive_seed, Cell, ExperimentConfig};
use enarkit::estimate::{build_design, fit_ls, fit_with_latent, DesignSpec};
use enarkit::lsm::{fit_lsm, lsm_loglik, planted_lsm, project_constraints, sample_lsm_graph, LsmConfig, LsmState};
use enarkit::network::{
    assortative_block_matrix, draw_dcmmsbm, draw_dcsbm, draw_rdpg, normalized_laplacian, procrustes_align,
    spectral_embed, Graph, IsolatedPolicy, LatentGraphSpec,
};
use enarkit::process::{autocov, simulate, stationary_moments, CovariateSpec, Dynamics, EnarParams, Init};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

fn orthogonal(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    gaussian(rng, k, k).qr().q()
}

/// Erdős–Rényi graph plus a path through all nodes.
fn connected(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if j == i + 1 || rng.random::<f64>() < p {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

fn latent_spec(rng: &mut ChaCha8Rng, which: u8, n: usize, k: usize, degree: f64) -> LatentGraphSpec {
    let block = assortative_block_matrix(k, 0.2);
    match which % 3 {
        0 => draw_dcsbm(n, block, degree, rng),
        1 => draw_dcmmsbm(n, block, degree, rng),
        _ => draw_rdpg(n, k, degree / n as f64, rng),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sampled_graphs_are_simple(seed: u64, which in 0u8..3, n in 5usize..60, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = latent_spec(&mut rng, which, n, k, 0.5 * n as f64);
        let g = spec.generate(IsolatedPolicy::Allow, &mut rng).unwrap();
        let a = g.graph.to_dense();
        prop_assert_eq!(&a, &a.transpose());
        prop_assert!(a.diagonal().iter().all(|&x| x == 0.0));
        prop_assert!(a.iter().all(|&x| x == 0.0 || x == 1.0));
    }

    #[test]
    fn block_models_hit_the_expected_degree(seed: u64, which in 0u8..2, n in 5usize..80, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let degree = rng.random_range(1.0..0.5 * n as f64);
        let spec = latent_spec(&mut rng, which, n, k, degree);
        let conn = spec.connection_matrix().unwrap();
        prop_assert!((conn.max_row_sum - degree).abs() <= 1e-9 * degree);
        if conn.clipped == 0 {
            let max = conn.p.row_iter().map(|r| r.sum()).fold(0.0, f64::max);
            prop_assert!((max - degree).abs() <= 1e-9 * degree);
        }
    }

    #[test]
    fn laplacian_spectral_radius_is_at_most_one(seed: u64, n in 2usize..40, p in 0.0f64..0.8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let l = normalized_laplacian(&connected(&mut rng, n, p), false).unwrap().to_dense();
        prop_assert!(l.symmetric_eigenvalues().amax() <= 1.0 + 1e-12);
    }

    #[test]
    fn embeddings_are_orthonormal(seed: u64, n in 3usize..50, k in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = k.min(n - 1);
        let u = spectral_embed(&connected(&mut rng, n, 0.3), k).unwrap().vectors;
        prop_assert!((u.transpose() * &u - DMatrix::identity(k, k)).amax() < 1e-10);
    }

    #[test]
    fn procrustes_is_orthogonal_and_no_worse_than_identity(seed: u64, n in 3usize..30, k in 1usize..5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = gaussian(&mut rng, n, k);
        let b = gaussian(&mut rng, n, k);
        let al = procrustes_align(&a, &b).unwrap();
        prop_assert!((al.h.transpose() * &al.h - DMatrix::identity(k, k)).amax() < 1e-10);
        prop_assert!((al.residual - (&a - &b * &al.h).norm()).abs() < 1e-9);
        prop_assert!(al.residual <= (&a - &b).norm() + 1e-12);
    }

    #[test]
    fn lyapunov_fixed_point_and_autocov_symmetry(seed: u64, n in 2usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lap = normalized_laplacian(&connected(&mut rng, n, 0.3), false).unwrap();
        let alpha = rng.random_range(-0.9..0.9);
        let room: f64 = 0.99 - f64::abs(alpha);
        let theta = rng.random_range(-room..room);
        let c = rng.random_range(0.01..3.0);
        let effect = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let m = stationary_moments(&lap, &effect, alpha, theta, c).unwrap();
        let resid = &m.gamma0 - &m.g * &m.gamma0 * m.g.transpose() - DMatrix::identity(n, n) * c;
        prop_assert!(resid.norm() < 1e-8 * m.gamma0.norm());
        for h in 0..6 {
            prop_assert_eq!(autocov(&m, h).transpose(), autocov(&m, -h));
        }
    }

    #[test]
    fn noiseless_path_started_at_the_mean_is_constant(seed: u64, n in 2usize..30, t in 1usize..10) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = connected(&mut rng, n, 0.2);
        let lap = normalized_laplacian(&g, false).unwrap();
        let u = spectral_embed(&g, 1).unwrap().vectors;
        let params = EnarParams { alpha: 0.3, theta: -0.4, beta: vec![2.0], gamma: vec![], sigma: 0.0 };
        let dynamics = Dynamics::enar(&params, &u).unwrap();
        let cov = CovariateSpec::new(vec![]).unwrap();
        let phi = enarkit::process::stationary_mean(&dynamics, &lap).unwrap();
        let panel = simulate(&dynamics, &lap, &cov, t, &Init::Fixed(phi.clone()), &mut rng).unwrap();
        for s in 0..=t {
            prop_assert!((panel.y_at(s) - &phi).amax() < 1e-12);
        }
    }

    #[test]
    fn simulation_is_seed_deterministic(seed: u64, n in 2usize..25, t in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = connected(&mut rng, n, 0.2);
        let lap = normalized_laplacian(&g, false).unwrap();
        let u = spectral_embed(&g, 1).unwrap().vectors;
        let dynamics = Dynamics::enar(&EnarParams::default_for(1), &u).unwrap();
        let draw = |s: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            simulate(&dynamics, &lap, &CovariateSpec::default(), t, &Init::Stationary, &mut rng).unwrap()
        };
        prop_assert_eq!(draw(seed ^ 1), draw(seed ^ 1));
    }

    #[test]
    fn least_squares_residuals_are_orthogonal(seed: u64, d in 1usize..7, extra in 1usize..34) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = gaussian(&mut rng, d + extra, d);
        let y = gaussian(&mut rng, d + extra, 1).column(0).into_owned();
        let fit = fit_ls(&w, &y).unwrap();
        let resid = &y - &w * &fit.mu_hat;
        prop_assert!((w.transpose() * resid).amax() < 1e-10 * (1.0 + w.norm() * y.norm()));
        let oracle = (w.transpose() * &w).try_inverse().unwrap() * w.transpose() * &y;
        prop_assert!((&fit.mu_hat - oracle).amax() < 1e-10);
    }

    #[test]
    fn rotating_the_embedding_only_rotates_beta(seed: u64, n in 15usize..40, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = connected(&mut rng, n, 0.2);
        let lap = normalized_laplacian(&g, false).unwrap();
        let u = spectral_embed(&g, k).unwrap().vectors;
        let dynamics = Dynamics::enar(&EnarParams::default_for(k), &u).unwrap();
        let panel = simulate(&dynamics, &lap, &CovariateSpec::default(), 5, &Init::Stationary, &mut rng).unwrap();
        let r = orthogonal(&mut rng, k);
        let spec = DesignSpec::Enar { k };
        let a = fit_with_latent(&panel, &lap, &u, &spec).unwrap();
        let ur = &u * &r;
        let b = fit_with_latent(&panel, &lap, &ur, &spec).unwrap();
        let d = a.fit.mu_hat.len();
        prop_assert!((a.fit.mu_hat.rows(k, d - k) - b.fit.mu_hat.rows(k, d - k)).amax() < 1e-9);
        prop_assert!((r.transpose() * a.beta() - b.beta()).amax() < 1e-9);
        let fitted_a = build_design(&panel, &lap, &u, &spec).unwrap().w * &a.fit.mu_hat;
        let fitted_b = build_design(&panel, &lap, &ur, &spec).unwrap().w * &b.fit.mu_hat;
        prop_assert!((fitted_a - fitted_b).amax() < 1e-9);
        prop_assert!((a.fit.sigma2_hat - b.fit.sigma2_hat).abs() < 1e-9);
        prop_assert!((a.fit.aic - b.fit.aic).abs() < 1e-9 && (a.fit.bic - b.fit.bic).abs() < 1e-9);
    }

    #[test]
    fn nar_design_is_enar_without_latent_columns(seed: u64, n in 5usize..30, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = connected(&mut rng, n, 0.3);
        let lap = normalized_laplacian(&g, false).unwrap();
        let u = spectral_embed(&g, k.min(n - 1)).unwrap().vectors;
        let k = u.ncols();
        let dynamics = Dynamics::enar(&EnarParams::default_for(k), &u).unwrap();
        let panel = simulate(&dynamics, &lap, &CovariateSpec::default(), 4, &Init::Stationary, &mut rng).unwrap();
        let enar = build_design(&panel, &lap, &u, &DesignSpec::Enar { k }).unwrap();
        let nar = build_design(&panel, &lap, &DMatrix::zeros(n, 0), &DesignSpec::Nar).unwrap();
        prop_assert_eq!(nar.w, enar.w.columns(k, enar.w.ncols() - k).into_owned());
        prop_assert_eq!(nar.y, enar.y);
    }

    #[test]
    fn lsm_loglik_depends_on_q_through_qqt(seed: u64, n in 3usize..20, k in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = connected(&mut rng, n, 0.3);
        let state = LsmState::new(gaussian(&mut rng, n, k), gaussian(&mut rng, n, 1).column(0).into_owned()).unwrap();
        let rotated = LsmState::new(&state.q * orthogonal(&mut rng, k), state.v.clone()).unwrap();
        let (a, b) = (lsm_loglik(&state, &g).unwrap(), lsm_loglik(&rotated, &g).unwrap());
        prop_assert!((a - b).abs() < 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn projection_lands_in_the_constraint_set(seed: u64, n in 3usize..30, k in 1usize..4, cap in 0.5f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = LsmState::new(gaussian(&mut rng, n, k) * 2.0, gaussian(&mut rng, n, 1).column(0).into_owned()).unwrap();
        let r = project_constraints(&state, cap).residuals();
        prop_assert!(r.max_row_norm <= cap + 1e-9);
        prop_assert!(r.centering < 1e-8);
        prop_assert!(r.orthogonality < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn lsm_fit_ascends_and_stays_feasible(seed: u64, n in 10usize..40, k in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = planted_lsm(n, k, 1.0, -0.5, &mut rng);
        let (g, _) = sample_lsm_graph(&truth, IsolatedPolicy::Allow, &mut rng).unwrap();
        let config = LsmConfig { max_iters: 60, ..LsmConfig::default() };
        let fit = fit_lsm(&g, k, &config).unwrap();
        prop_assert!(fit.trace.windows(2).all(|w| w[1] >= w[0] - 1e-12));
        let r = fit.state.residuals();
        prop_assert!(r.max_row_norm <= config.cap_for(k) + 1e-9);
        prop_assert!(r.centering < 1e-8 && r.orthogonality < 1e-8);
        prop_assert!((fit.loglik - lsm_loglik(&fit.state, &g).unwrap()).abs() < 1e-9 * (1.0 + fit.loglik.abs()));
    }
}

#[test]
fn derived_seeds_are_distinct_over_the_full_grid() {
    let config = ExperimentConfig::default();
    let mut seen = std::collections::HashSet::new();
    for cell in enarkit::bench::cells(&config) {
        for rep in 0..config.reps {
            assert!(seen.insert(derive_seed(config.base_seed, &cell, rep)));
        }
    }
    let probe = Cell {
        gen: enarkit::bench::GeneratorKind::Lsm,
        truth: enarkit::bench::ModelKind::Amnar,
        n: 40,
        t: 2,
        k: 3,
    };
    assert!(!seen.contains(&derive_seed(config.base_seed, &probe, 0)));
}
