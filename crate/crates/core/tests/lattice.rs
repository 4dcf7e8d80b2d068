use dealer_core::lattice::{
    lattice_monte_carlo, lattice_steady_state, lattice_transient, LatticeDistribution,
    LatticeMcConfig, LatticeMode, LatticeParams,
};

fn params(n_bar: usize) -> LatticeParams<f64> {
    LatticeParams::diffusive(0.5, 2.0, n_bar).unwrap()
}

fn mc(mode: LatticeMode<f64>, thin: u64, seed: u64) -> LatticeMcConfig<f64> {
    LatticeMcConfig {
        mode,
        burn_in: 1_000,
        thin,
        samples_per_run: 250_000,
        seed,
        n_runs: 4,
    }
}

#[test]
fn event_driven_walker_matches_linear_solve() {
    let p = params(4);
    let exact = lattice_steady_state(&p).unwrap();
    // Mixing on 7 sites takes a few dozen hops; 64 keeps samples nearly independent.
    let counts = lattice_monte_carlo(&p, &mc(LatticeMode::EventDriven, 64, 11)).unwrap();
    assert_eq!(counts.n_samples, 1_000_000);
    let z = counts.max_z_score(&exact);
    assert!(z < 3.0, "max z-score {z}");
}

#[test]
fn bernoulli_walker_matches_linear_solve() {
    let p = params(4);
    let exact = lattice_steady_state(&p).unwrap();
    let dt = 0.1 / p.lambda();
    // About 64 hops between samples at λ·dt = 0.1.
    let counts = lattice_monte_carlo(&p, &mc(LatticeMode::FixedStep { dt }, 640, 12)).unwrap();
    let z = counts.max_z_score(&exact);
    assert!(z < 3.0, "max z-score {z}");
}

#[test]
fn both_walkers_agree_with_each_other() {
    let p = params(4);
    let dt = 0.1 / p.lambda();
    let a = lattice_monte_carlo(&p, &mc(LatticeMode::EventDriven, 64, 21)).unwrap();
    let b = lattice_monte_carlo(&p, &mc(LatticeMode::FixedStep { dt }, 640, 22)).unwrap();
    let (fa, fb) = (a.frequencies(), b.frequencies());
    let n = a.n_samples as f64;
    for (x, y) in fa.iter().zip(&fb) {
        let pooled = (x + y) / 2.0;
        let sd = (2.0 * pooled * (1.0 - pooled) / n).sqrt();
        assert!((x - y).abs() < 4.0 * sd, "{x} vs {y}");
    }
}

#[test]
fn steady_state_is_even_and_peaked_at_origin() {
    for n_bar in 2..=24 {
        let p = params(n_bar);
        let s = lattice_steady_state(&p).unwrap();
        let probs = s.probs();
        let m = probs.len();
        let centre = m / 2;
        for k in 0..m {
            assert!((probs[k] - probs[m - 1 - k]).abs() < 1e-14, "n̄ = {n_bar}");
        }
        for k in centre..m - 1 {
            assert!(probs[k] > probs[k + 1], "n̄ = {n_bar} not decreasing at {k}");
        }
    }
}

#[test]
fn transient_relaxes_to_linear_solve() {
    let p = params(6);
    let start = LatticeDistribution::point_mass(&p, 3).unwrap();
    let exact = lattice_steady_state(&p).unwrap();
    let late = lattice_transient(&start, &p, 40.0, 0.2 / p.lambda()).unwrap();
    assert!(late.l1_distance(&exact).unwrap() < 1e-9);
}
