use rotnls::functionals::sigma_distance;
use rotnls::groundstate::{
    certify, frequency_sweep, instability_indicator, minimize_local, minimize_nehari_with, GroundState, LocalMinimizationSpec,
    SolverConfig,
};
use rotnls::qprofile::solve_q;
use rotnls::random::{rng_from_seed, smooth_random_field};
use rotnls::{make_grid, Grid, PhysicsParams};

fn params() -> PhysicsParams {
    PhysicsParams::new(2, 5.0, &[1.0, 1.0], 0.2).unwrap()
}

fn nehari_grid() -> Grid {
    make_grid(2, &[5.0, 5.0], &[128, 128]).unwrap()
}

fn nehari(omega: f64, seed: Option<u64>) -> GroundState {
    let grid = nehari_grid();
    let mut cfg = SolverConfig::new(1e-9);
    cfg.lambda0 = Some(-2.0);
    cfg.initial = seed.map(|s| smooth_random_field(&grid, &mut rng_from_seed(s), 3));
    minimize_nehari_with(omega, &params(), &grid, &cfg).unwrap()
}

#[test]
fn nehari_level_does_not_depend_on_the_start() {
    let reference = nehari(1.0, None);
    for seed in [3, 17] {
        let gs = nehari(1.0, Some(seed));
        let d0 = reference.d_omega.unwrap();
        let d = gs.d_omega.unwrap();
        assert!((d - d0).abs() < 1e-6 * d0, "seed {seed}: {d} vs {d0}");
    }
    assert!(reference.d_omega.unwrap() > 0.0);
}

#[test]
fn nehari_state_certifies_and_is_scaling_unstable() {
    let gs = nehari(1.0, None);
    let cert = certify(&gs).unwrap();
    assert!(cert.passed, "{cert:?}");
    assert!(cert.ew1_residual.unwrap() < 1e-5);
    assert!(instability_indicator(&gs).unwrap() < 0.0);
}

#[test]
fn negative_frequency_state_has_positive_indicator() {
    let gs = nehari(-1.0, None);
    assert!(gs.residual < 1e-6);
    assert!(instability_indicator(&gs).unwrap() > 0.0);
}

#[test]
fn local_minimizers_approach_the_bottom_of_the_spectrum() {
    let q0 = solve_q(2, 5.0, 1e-10).unwrap();
    let grid = make_grid(2, &[8.0, 8.0], &[64, 64]).unwrap();
    let mut previous: Option<f64> = None;
    for q in [0.2, 0.1, 0.05] {
        let spec = LocalMinimizationSpec::new(q, 4.0, &params(), q0.c_gn).unwrap();
        let gs = minimize_local(&spec, &params(), &grid, 1e-8).unwrap();
        let gap = gs.omega - gs.lambda0;
        assert!(gap > 0.0);
        assert!(gs.energy < -0.5 * gs.lambda0 * q);
        assert!((gs.mass - q).abs() < 1e-12);
        if let Some(p) = previous {
            assert!(gap < p, "{gap} !< {p}");
        }
        previous = Some(gap);
        // The minimizer is within O(q) of the normalized linear ground state.
        let lin = rotnls::spectrum::lowest_eigenpair(&grid, &params(), 1e-10).unwrap().eigenfield.scaled(q.sqrt());
        assert!(sigma_distance(&gs.field, &lin) < 2.0 * q * q.sqrt());
    }
}

#[test]
fn large_frequency_quantity_decreases() {
    let params = PhysicsParams::new(2, 5.0, &[1.0, 1.0], 0.05).unwrap();
    let grid = make_grid(2, &[8.0, 8.0], &[128, 128]).unwrap();
    let pts = frequency_sweep(&params, &[1.0, 2.0, 4.0], &grid, 1e-8).unwrap();
    assert!(pts.windows(2).all(|w| w[1].quantity < w[0].quantity), "{pts:?}");
    assert!(pts.iter().all(|p| p.residual < 1e-6));
}
