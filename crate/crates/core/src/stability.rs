//! Orbital stability experiments around computed ground states.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_with, EvolveConfig, SimState, Termination};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::functionals::{sigma_distance, sigma_norm2};
use crate::groundstate::{dilate, indicator_of, GroundState};
use crate::random::{rng_from_seed, smooth_random_field};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Seeded smooth random field, normalized in `Sigma`; the sum is renormalized to the
    /// ground-state mass.
    Random,
    /// `(1 + delta)^{N/2} phi((1 + delta) x)`.
    Scaling,
    /// No perturbation; controls standing-wave exactness.
    None,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityRun {
    pub delta: f64,
    pub direction: Direction,
    pub initial_distance: f64,
    /// `sup_t inf_theta ||u(t) - e^{i theta} phi||_Sigma` over valid samples.
    pub sup_distance: f64,
    pub termination: Termination,
    /// Blow-up or lost resolution during the run; counts as instability evidence.
    pub collapsed: bool,
    pub distances: Vec<(f64, f64)>,
}

impl StabilityRun {
    pub fn ratio(&self) -> f64 {
        self.sup_distance / self.delta
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub omega: f64,
    pub instability_indicator: f64,
    pub runs: Vec<StabilityRun>,
}

impl StabilityReport {
    pub fn runs_in(&self, direction: Direction) -> impl Iterator<Item = &StabilityRun> {
        self.runs.iter().filter(move |r| r.direction == direction)
    }

    /// Largest over smallest `sup_distance / delta` among random-direction runs; near one
    /// when the distance is linear in `delta`.
    pub fn linear_spread(&self) -> Option<f64> {
        let ratios: Vec<f64> = self.runs_in(Direction::Random).map(StabilityRun::ratio).collect();
        if ratios.len() < 2 {
            return None;
        }
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        Some(max / min)
    }

    /// Whether every scaling run left a `factor * delta` neighborhood or collapsed.
    pub fn scaling_escapes(&self, factor: f64) -> bool {
        let mut any = false;
        for r in self.runs_in(Direction::Scaling) {
            any = true;
            if !(r.collapsed || r.sup_distance > factor * r.delta) {
                return false;
            }
        }
        any
    }
}

#[derive(Debug, Clone)]
pub struct StabilityOptions {
    pub evolve: EvolveConfig,
    pub seed: u64,
    pub directions: Vec<Direction>,
}

fn perturbed(gs: &GroundState, delta: f64, direction: Direction, seed: u64) -> Result<ComplexField> {
    let phi = &gs.field;
    match direction {
        Direction::None => Ok(phi.clone()),
        Direction::Scaling => dilate(phi, 1.0 + delta),
        Direction::Random => {
            let mut rng = rng_from_seed(seed);
            let w = smooth_random_field(phi.grid(), &mut rng, 4);
            let w = w.scaled(1.0 / sigma_norm2(&w).sqrt());
            let u = phi.lincomb(1.0, delta, &w);
            Ok(u.scaled((phi.mass() / u.mass()).sqrt()))
        }
    }
}

pub fn stability_experiment(gs: &GroundState, deltas: &[f64], opts: &StabilityOptions) -> Result<StabilityReport> {
    if deltas.iter().any(|d| !(*d > 0.0)) || deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParams("deltas must be positive and decreasing".into()));
    }
    let phi = &gs.field;
    let mut cases: Vec<(f64, Direction)> = Vec::new();
    for &dir in &opts.directions {
        if dir == Direction::None {
            cases.push((0.0, dir));
        } else {
            cases.extend(deltas.iter().map(|&d| (d, dir)));
        }
    }
    let mut runs = Vec::with_capacity(cases.len());
    for (delta, direction) in cases {
        let u0 = perturbed(gs, delta, direction, opts.seed)?;
        let initial_distance = sigma_distance(&u0, phi);
        let state = SimState::new(u0, gs.params.clone())?;
        let mut distances = Vec::new();
        let tr = evolve_with(state, &opts.evolve, |s, _| {
            distances.push((s.t, sigma_distance(&s.field, phi)));
            ControlFlow::Continue(())
        })?;
        let sup_distance = distances.iter().map(|d| d.1).fold(0.0, f64::max);
        let collapsed = tr.termination != Termination::HorizonReached;
        log::info!("stability run delta = {delta:e} ({direction:?}): sup distance {sup_distance:.3e}, {:?}", tr.termination);
        runs.push(StabilityRun { delta, direction, initial_distance, sup_distance, termination: tr.termination, collapsed, distances });
    }
    Ok(StabilityReport { omega: gs.omega, instability_indicator: indicator_of(phi, &gs.params)?, runs })
}
