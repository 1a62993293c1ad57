use num_complex::Complex64;
use rotnls::classify::{classify, estimate_l_isotropic, Verdict};
use rotnls::diagnostics::jpp_finite_difference;
use rotnls::dynamics::{evolve, evolve_with, EvolveConfig, SimState, Termination};
use rotnls::functionals::{sigma_distance, sigma_norm2};
use rotnls::groundstate::{minimize_local, LocalMinimizationSpec};
use rotnls::qprofile::solve_q;
use rotnls::stability::{stability_experiment, Direction, StabilityOptions};
use rotnls::{make_grid, ComplexField, PhysicsParams};
use std::ops::ControlFlow;

fn params() -> PhysicsParams {
    PhysicsParams::new(2, 5.0, &[1.0, 1.0], 0.2).unwrap()
}

fn local_state() -> rotnls::groundstate::GroundState {
    let q = solve_q(2, 5.0, 1e-10).unwrap();
    let spec = LocalMinimizationSpec::new(0.1, 4.0, &params(), q.c_gn).unwrap();
    minimize_local(&spec, &params(), &make_grid(2, &[8.0, 8.0], &[64, 64]).unwrap(), 1e-10).unwrap()
}

#[test]
fn ground_state_evolves_as_a_standing_wave() {
    let gs = local_state();
    let scale = sigma_norm2(&gs.field).sqrt();
    let mut worst: f64 = 0.0;
    let state = SimState::new(gs.field.clone(), gs.params.clone()).unwrap();
    let tr = evolve_with(state, &EvolveConfig::new(10.0, 1e-3, 100), |s, _| {
        worst = worst.max(sigma_distance(&s.field, &gs.field) / scale);
        ControlFlow::Continue(())
    })
    .unwrap();
    assert_eq!(tr.termination, Termination::HorizonReached);
    assert!(worst < 1e-4, "{worst}");
    // The phase rotates at the multiplier: u(t) = exp(i omega t / 2) phi.
    let phase = Complex64::from_polar(1.0, 0.5 * gs.omega * tr.final_state.t);
    let mut rotated = gs.field.clone();
    rotated.scale_complex(phase);
    let err = sigma_norm2(&tr.final_state.field.sub(&rotated)).sqrt() / scale;
    assert!(err < 1e-3, "{err}");
}

#[test]
fn local_minimizer_response_is_linear_in_delta() {
    let gs = local_state();
    let opts = StabilityOptions { evolve: EvolveConfig::new(5.0, 1e-3, 50), seed: 9, directions: vec![Direction::Random] };
    let rep = stability_experiment(&gs, &[1e-2, 1e-3], &opts).unwrap();
    let spread = rep.linear_spread().unwrap();
    assert!(spread < 2.0, "{spread}");
    assert!(rep.runs.iter().all(|r| !r.collapsed));
}

#[test]
fn virial_second_derivative_matches_finite_differences() {
    let grid = make_grid(2, &[8.0, 8.0], &[64, 64]).unwrap();
    let u = ComplexField::from_fn(&grid, |x| {
        Complex64::new(0.9, 0.2 * x[1]) * (-0.5 * ((x[0] - 0.4).powi(2) + 1.3 * x[1] * x[1])).exp()
    });
    let tr = evolve(SimState::new(u, params()).unwrap(), &EvolveConfig::new(0.3, 1e-4, 10)).unwrap();
    let fd = jpp_finite_difference(&tr.rows);
    let scale = tr.rows.iter().map(|r| r.jpp_vfm.abs()).fold(0.0, f64::max);
    for ((t, v), row) in fd.iter().zip(&tr.rows[1..]) {
        assert_eq!(*t, row.t);
        assert!((v - row.jpp_vfm).abs() < 1e-3 * scale, "t = {t}: {v} vs {}", row.jpp_vfm);
    }
}

#[test]
fn small_datum_stays_below_gradient_threshold() {
    let q = solve_q(2, 5.0, 1e-10).unwrap();
    let grid = make_grid(2, &[8.0, 8.0], &[128, 128]).unwrap();
    let u0 = ComplexField::from_fn(&grid, |x| Complex64::new(0.5 * (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp(), 0.0));
    let report = classify(&u0, &params(), &q, &estimate_l_isotropic(&u0, &params()).unwrap()).unwrap();
    assert_eq!(report.verdict, Verdict::KPlus);
    let tr = evolve(SimState::new(u0, params()).unwrap(), &EvolveConfig::new(2.0, 2e-3, 25)).unwrap();
    assert_eq!(tr.termination, Termination::HorizonReached);
    assert!(tr.rows.iter().all(|r| r.grad_product < report.grad_threshold));
}
