use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use fsoe::fsoe::{
    eigenvalues_2x2, equilibria, find_fixed_points, instrumental_g, jacobian_fsoe, rhs_fsoe,
    simulate_fsoe, FsoeState, DEFAULT_GRID, DEFAULT_ROOT_TOL,
};
use fsoe::graph::Graph;
use fsoe::model::{ModelConfig, SmoothFunction};
use fsoe::network::{check_odd_dynamics, rhs_network, simulate_network, NetworkState};
use fsoe::ode::SolverOptions;

fn graph_from_seed(seed: u64, n: usize) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Graph::random_connected(n, 0.25, &mut rng)
}

fn config_strategy() -> impl Strategy<Value = ModelConfig> {
    (
        0.0..=1.0f64,
        0.05..=1.0f64,
        0.5..5.0f64,
        -5.0..-0.5f64,
        0.3..3.0f64,
        0.2..3.0f64,
        0.2..3.0f64,
    )
        .prop_map(|(beta, gamma, ks, kr, slope, tx, te)| {
            let ebar = 0.5;
            ModelConfig {
                s: SmoothFunction::tanh(ks),
                r: SmoothFunction::tanh(kr),
                u: SmoothFunction::affine(slope, gamma * ebar),
                beta,
                gamma,
                ebar,
                tau_x: tx,
                tau_e: te,
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn averaging_stays_within_neighbor_range(seed in any::<u64>(), n in 2usize..25, scale in 0.1..10.0f64) {
        let g = graph_from_seed(seed, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let v: Vec<f64> = (0..n).map(|_| scale * rand::Rng::random_range(&mut rng, -1.0..=1.0)).collect();
        let w = g.apply_normalized_adjacency(&v).unwrap();
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        for wi in &w {
            prop_assert!(*wi >= lo && *wi <= hi);
        }
        let ones = g.apply_normalized_adjacency(&vec![1.0; n]).unwrap();
        prop_assert!(ones.iter().all(|&x| (x - 1.0).abs() <= 1e-15));
        for &(i, j) in g.edges() {
            prop_assert!(g.has_edge(i, j) && g.has_edge(j, i));
        }
    }

    #[test]
    fn jacobian_matches_finite_differences(cfg in config_strategy(), p in -1.0..1.0f64, e in -3.0..3.0f64) {
        let h = 1e-6;
        let j = jacobian_fsoe(&cfg, FsoeState::new(p, e));
        let f = |p: f64, e: f64| rhs_fsoe(&cfg, FsoeState::new(p, e));
        let (dp_p, de_p) = {
            let (a, b) = (f(p + h, e), f(p - h, e));
            ((a.0 - b.0) / (2.0 * h), (a.1 - b.1) / (2.0 * h))
        };
        let (dp_e, de_e) = {
            let (a, b) = (f(p, e + h), f(p, e - h));
            ((a.0 - b.0) / (2.0 * h), (a.1 - b.1) / (2.0 * h))
        };
        prop_assert!((j.a11 - dp_p).abs() <= 1e-6);
        prop_assert!((j.a12 - dp_e).abs() <= 1e-6);
        prop_assert!((j.a21 - de_p).abs() <= 1e-6);
        prop_assert!((j.a22 - de_e).abs() <= 1e-6);
    }

    #[test]
    fn eigenvalues_reproduce_trace_and_det(cfg in config_strategy(), p in -1.0..1.0f64, e in -3.0..3.0f64) {
        let j = jacobian_fsoe(&cfg, FsoeState::new(p, e));
        let [l1, l2] = eigenvalues_2x2(&j);
        let scale = 1.0 + j.trace.abs() + j.det.abs();
        prop_assert!(((l1 + l2).re - j.trace).abs() <= 1e-10 * scale);
        prop_assert!((l1 + l2).im.abs() <= 1e-10 * scale);
        prop_assert!(((l1 * l2).re - j.det).abs() <= 1e-10 * scale);
        prop_assert!((l1 * l2).im.abs() <= 1e-10 * scale);
    }

    #[test]
    fn instrumental_map_is_odd(cfg in config_strategy(), x in -1.0..=1.0f64) {
        let a = instrumental_g(&cfg, x).unwrap();
        let b = instrumental_g(&cfg, -x).unwrap();
        prop_assert!((a + b).abs() <= 1e-12, "{} {}", a, b);
    }

    #[test]
    fn fixed_points_are_symmetric_equilibria(beta in 0.0..=1.0f64, gamma in 0.05..=1.0f64) {
        let cfg = ModelConfig::canonical_with_gamma(beta, gamma);
        let roots = find_fixed_points(&cfg, DEFAULT_GRID, DEFAULT_ROOT_TOL).unwrap();
        for x in &roots {
            prop_assert!(roots.iter().any(|y| (x + y).abs() <= 1e-9), "{:?}", roots);
        }
        for eq in equilibria(&cfg).unwrap() {
            let (dp, de) = rhs_fsoe(&cfg, FsoeState::new(eq.p_star, eq.e_star));
            prop_assert!(dp.abs().max(de.abs()) <= 1e-10);
        }
    }

    #[test]
    fn network_field_is_odd(seed in any::<u64>(), n in 2usize..20, beta in 0.0..=1.0f64, e in -3.0..3.0f64) {
        let g = graph_from_seed(seed, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.rotate_left(7));
        let st = NetworkState {
            x: (0..n).map(|_| rand::Rng::random_range(&mut rng, -1.0..=1.0)).collect(),
            e,
        };
        prop_assert!(check_odd_dynamics(&ModelConfig::canonical(beta), &g, &st).unwrap() <= 1e-12);
    }

    #[test]
    fn consensus_velocities_are_equal(seed in any::<u64>(), n in 2usize..20, cfg in config_strategy(), p in -1.0..1.0f64, e in -3.0..3.0f64) {
        let g = graph_from_seed(seed, n);
        let d = rhs_network(&cfg, &g, &NetworkState::consensus(n, p, e)).unwrap();
        prop_assert!(d.x.iter().all(|&v| v == d.x[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn opinions_stay_in_the_box(seed in any::<u64>(), n in 2usize..12, beta in 0.0..=1.0f64, e0 in -3.0..3.0f64) {
        let g = graph_from_seed(seed, n);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
        let st0 = NetworkState {
            x: (0..n).map(|_| rand::Rng::random_range(&mut rng, -1.0..=1.0)).collect(),
            e: e0,
        };
        let traj = simulate_network(&ModelConfig::canonical(beta), &g, &st0, 50.0, &SolverOptions::adaptive(1e-9, 1e-9)).unwrap();
        for y in &traj.states {
            prop_assert!(y[..n].iter().all(|x| x.abs() <= 1.0 + 1e-9));
        }
    }

    #[test]
    fn network_on_consensus_reduces_to_planar(seed in any::<u64>(), n in 2usize..12, beta in 0.0..=1.0f64, p0 in -1.0..1.0f64, e0 in -2.0..2.0f64) {
        let g = graph_from_seed(seed, n);
        let cfg = ModelConfig::canonical(beta);
        let opts = SolverOptions::adaptive(1e-10, 1e-10);
        let net = simulate_network(&cfg, &g, &NetworkState::consensus(n, p0, e0), 100.0, &opts).unwrap();
        let planar = simulate_fsoe(&cfg, FsoeState::new(p0, e0), 100.0, &opts).unwrap();
        prop_assert_eq!(net.times.len(), planar.times.len());
        for (a, b) in net.states.iter().zip(&planar.states) {
            prop_assert!((a[0] - b[0]).abs() <= 1e-8 && (a[n] - b[1]).abs() <= 1e-8);
        }
    }
}

#[test]
fn averaging_iterates_converge_on_connected_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let n = rand::Rng::random_range(&mut rng, 2..=20);
        let g = Graph::random_connected(n, 0.2, &mut rng);
        let mut v: Vec<f64> = (0..n)
            .map(|_| rand::Rng::random_range(&mut rng, -1.0..=1.0))
            .collect();
        // lazy averaging removes the period-2 mode of bipartite graphs
        for _ in 0..10_000 {
            let w = g.apply_normalized_adjacency(&v).unwrap();
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = 0.5 * (*vi + wi);
            }
        }
        let spread = fsoe::network::sync_error(&v);
        assert!(spread < 1e-8, "n = {n}: spread {spread:e}");
    }
}

#[test]
fn adaptive_and_fixed_step_agree() {
    let cfg = ModelConfig::canonical(0.4);
    let st0 = FsoeState::new(0.3, -0.2);
    let fixed = simulate_fsoe(&cfg, st0, 50.0, &SolverOptions::rk4(1e-3)).unwrap();
    let mut worst = 0.0f64;
    for k in 1..=10 {
        let t = 5.0 * k as f64;
        let adaptive = simulate_fsoe(&cfg, st0, t, &SolverOptions::adaptive(1e-9, 1e-9)).unwrap();
        let (_, a) = adaptive.last();
        let f = &fixed.states[5000 * k];
        assert!((fixed.times[5000 * k] - t).abs() < 1e-9);
        worst = worst.max((a[0] - f[0]).abs()).max((a[1] - f[1]).abs());
    }
    assert!(worst <= 1e-6, "{worst:e}");
}

#[test]
fn simulation_is_deterministic() {
    let cfg = ModelConfig::canonical(0.59);
    let g = Graph::triangle();
    let st0 = NetworkState {
        x: vec![0.1, -0.4, 0.7],
        e: 0.2,
    };
    let opts = SolverOptions::adaptive(1e-9, 1e-9);
    let a = simulate_network(&cfg, &g, &st0, 30.0, &opts).unwrap();
    let b = simulate_network(&cfg, &g, &st0, 30.0, &opts).unwrap();
    assert_eq!(a.times, b.times);
    assert_eq!(a.states, b.states);
}
