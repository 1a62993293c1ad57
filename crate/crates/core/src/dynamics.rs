//! Strang splitting for the rotating, trapped NLS with an alternating-direction
//! treatment of the rotation term, plus blow-up monitoring.
//!
//! The generator `-1/2 Lap + 1/2 V + L_Omega - |u|^{p-1}` is split into
//! `A = -1/2 d_11 + i c x_2 d_1`, `B = -1/2 d_22 (-1/2 d_33) - i c x_1 d_2` and the
//! pointwise part. `A` is diagonal in the mixed space `(xi_1, x_2, x_3)`, `B` in
//! `(x_1, xi_2, xi_3)`, and the pointwise flow preserves `|u|`, so every substep is exact.

use std::ops::ControlFlow;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{diagnostics, DiagnosticsRow};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::params::PhysicsParams;
use crate::spectral::integrate_with;

#[derive(Debug, Clone)]
pub struct SimState {
    pub field: ComplexField,
    pub t: f64,
    pub params: PhysicsParams,
    pub step_count: u64,
}

impl SimState {
    pub fn new(field: ComplexField, params: PhysicsParams) -> Result<Self> {
        field.check_finite()?;
        params.validate()?;
        if field.grid().dim() != params.dim {
            return Err(Error::DimensionMismatch { expected: params.dim, got: field.grid().dim() });
        }
        Ok(Self { field, t: 0.0, params, step_count: 0 })
    }
}

fn phase(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, -theta)
}

/// Precomputed substep multipliers for one time step `dt`.
pub struct Propagator {
    grid: Grid,
    params: PhysicsParams,
    dt: f64,
    nonlinear: bool,
    half_potential: Vec<f64>,
    /// Indexed by `(xi_1, x_2)`; shared along axis 3.
    table_a: Vec<Complex64>,
    /// Indexed by the full flat index of `(x_1, xi_2, xi_3)`.
    table_b: Vec<Complex64>,
    inner: usize,
}

impl Propagator {
    pub fn new(grid: &Grid, params: &PhysicsParams, dt: f64) -> Result<Self> {
        Self::with_nonlinearity(grid, params, dt, true)
    }

    /// `nonlinear = false` switches the focusing term off (linear trap dynamics).
    pub fn with_nonlinearity(grid: &Grid, params: &PhysicsParams, dt: f64, nonlinear: bool) -> Result<Self> {
        params.validate()?;
        if grid.dim() != params.dim {
            return Err(Error::DimensionMismatch { expected: params.dim, got: grid.dim() });
        }
        if !(dt.is_finite() && dt != 0.0) {
            return Err(Error::InvalidParams(format!("time step must be finite and nonzero, got {dt}")));
        }
        let c = params.rotation_coefficient();
        let g2: Vec<f64> = params.gammas.iter().map(|g| g * g).collect();
        let half_potential = grid.sample(|x| 0.5 * g2.iter().zip(x).map(|(g, xi)| g * xi * xi).sum::<f64>());

        let n = grid.points();
        let (k1, k1_odd, x2) = (grid.wavenumbers(0), grid.wavenumbers_odd(0), grid.coords(1));
        let mut table_a = Vec::with_capacity(n[0] * n[1]);
        for i0 in 0..n[0] {
            for &x in x2 {
                table_a.push(phase(dt * (0.5 * k1[i0] * k1[i0] - c * x * k1_odd[i0])));
            }
        }
        let half = 0.5 * dt;
        let (x1, k2, k2_odd) = (grid.coords(0), grid.wavenumbers(1), grid.wavenumbers_odd(1));
        let table_b = (0..grid.len())
            .map(|flat| {
                let idx = grid.unravel(flat);
                let mut sym = 0.5 * k2[idx[1]] * k2[idx[1]] + c * x1[idx[0]] * k2_odd[idx[1]];
                if grid.dim() == 3 {
                    let k3 = grid.wavenumbers(2)[idx[2]];
                    sym += 0.5 * k3 * k3;
                }
                phase(half * sym)
            })
            .collect();
        let inner = if grid.dim() == 3 { n[2] } else { 1 };
        Ok(Self {
            grid: grid.clone(),
            params: params.clone(),
            dt,
            nonlinear,
            half_potential,
            table_a,
            table_b,
            inner,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn pointwise(&self, data: &mut [Complex64], tau: f64) -> Result<()> {
        let q = 0.5 * (self.params.p - 1.0);
        let nonlinear = self.nonlinear;
        let bad = data
            .par_iter_mut()
            .zip(self.half_potential.par_iter())
            .map(|(u, &v)| {
                let rho = u.norm_sqr();
                let w = if nonlinear { v - rho.powf(q) } else { v };
                *u *= phase(tau * w);
                usize::from(!rho.is_finite())
            })
            .sum::<usize>();
        if bad > 0 {
            return Err(Error::CorruptField { index: data.iter().position(|z| !z.is_finite()).unwrap_or(0) });
        }
        Ok(())
    }

    fn flow_a(&self, data: &mut [Complex64]) {
        self.grid.transform_axis(data, 0, false);
        let inner = self.inner;
        data.par_iter_mut().enumerate().for_each(|(flat, u)| *u *= self.table_a[flat / inner]);
        self.grid.transform_axis(data, 0, true);
    }

    fn flow_b(&self, data: &mut [Complex64]) {
        let axes = 1..self.grid.dim();
        for a in axes.clone() {
            self.grid.transform_axis(data, a, false);
        }
        data.par_iter_mut().zip(self.table_b.par_iter()).for_each(|(u, m)| *u *= m);
        for a in axes {
            self.grid.transform_axis(data, a, true);
        }
    }

    /// One Strang step `N(dt/2) B(dt/2) A(dt) B(dt/2) N(dt/2)` in place.
    pub fn step(&self, state: &mut SimState) -> Result<()> {
        let half = 0.5 * self.dt;
        let data = state.field.values_mut();
        self.pointwise(data, half)?;
        self.flow_b(data);
        self.flow_a(data);
        self.flow_b(data);
        self.pointwise(data, half)?;
        state.t += self.dt;
        state.step_count += 1;
        Ok(())
    }

    /// Soft phase-wrap check `|dt| max |V/2 - |u|^{p-1}| < pi`.
    pub fn phase_wrap_ok(&self, field: &ComplexField) -> bool {
        let q = 0.5 * (self.params.p - 1.0);
        let m = field
            .values()
            .iter()
            .zip(&self.half_potential)
            .map(|(u, v)| (v - if self.nonlinear { u.norm_sqr().powf(q) } else { 0.0 }).abs())
            .fold(0.0, f64::max);
        self.dt.abs() * m < std::f64::consts::PI
    }
}

/// Advance a state by one step of size `dt`.
pub fn step(state: &SimState, dt: f64) -> Result<SimState> {
    let prop = Propagator::new(state.field.grid(), &state.params, dt)?;
    let mut next = state.clone();
    prop.step(&mut next)?;
    Ok(next)
}

/// `dl/dt` along the flow: `-c (gamma_2^2 - gamma_1^2) int x_1 x_2 |u|^2`, with `c` the
/// signed rotation coefficient. Vanishes for isotropic traps.
pub fn ang_mom_rate(field: &ComplexField, params: &PhysicsParams) -> f64 {
    let c = params.rotation_coefficient();
    let aniso = params.gammas[1].powi(2) - params.gammas[0].powi(2);
    if c == 0.0 || aniso == 0.0 {
        return 0.0;
    }
    let grid = field.grid();
    let v = field.values();
    -c * aniso
        * integrate_with(grid, |i| {
            let x = grid.position(i);
            x[0] * x[1] * v[i].norm_sqr()
        })
}

/// Blow-up detector thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MonitorConfig {
    /// Gradient growth `||grad u(t)|| / ||grad u(0)||` required to flag blow-up.
    pub gradient_factor: f64,
    /// Spectral tail fraction that signals lost resolution.
    pub tail_threshold: f64,
}

impl Default for MonitorConfig {
    fn default() -> Self {
        Self { gradient_factor: 50.0, tail_threshold: 0.01 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorStatus {
    Running,
    BlowupDetected,
    ResolutionLost,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    pub status: MonitorStatus,
    pub gradient_ratio: f64,
    pub tail_fraction: f64,
    pub l_running_min: f64,
}

#[derive(Debug, Clone)]
pub struct BlowupMonitor {
    pub config: MonitorConfig,
    pub baseline_grad: f64,
    pub l_running_min: f64,
}

impl BlowupMonitor {
    pub fn new(baseline: &DiagnosticsRow, config: MonitorConfig) -> Self {
        Self { config, baseline_grad: baseline.grad_norm, l_running_min: baseline.report.ang_mom }
    }

    pub fn observe(&mut self, row: &DiagnosticsRow) -> MonitorReport {
        self.l_running_min = self.l_running_min.min(row.report.ang_mom);
        let gradient_ratio = row.grad_norm / self.baseline_grad;
        let tail = row.tail_fraction;
        let status = if tail > self.config.tail_threshold {
            if gradient_ratio > self.config.gradient_factor {
                MonitorStatus::BlowupDetected
            } else {
                MonitorStatus::ResolutionLost
            }
        } else {
            MonitorStatus::Running
        };
        MonitorReport { status, gradient_ratio, tail_fraction: tail, l_running_min: self.l_running_min }
    }
}

/// Check `state` against the detector given a baseline taken at `t = 0`.
pub fn blowup_monitor(state: &SimState, baseline: &DiagnosticsRow, config: MonitorConfig) -> MonitorReport {
    let row = diagnostics(state, baseline.l_running_min);
    BlowupMonitor::new(baseline, config).observe(&row)
}

/// Optional step-size reduction while the gradient grows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtShrink {
    /// Halve `dt` each time the gradient norm grows by this factor since the last change.
    pub growth: f64,
    pub min_dt: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub horizon: f64,
    pub dt: f64,
    pub sample_every: usize,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default)]
    pub dt_shrink: Option<DtShrink>,
    #[serde(default = "yes")]
    pub nonlinear: bool,
}

fn yes() -> bool {
    true
}

impl EvolveConfig {
    pub fn new(horizon: f64, dt: f64, sample_every: usize) -> Self {
        Self { horizon, dt, sample_every, monitor: MonitorConfig::default(), dt_shrink: None, nonlinear: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    HorizonReached,
    BlowupDetected,
    ResolutionLost,
}

/// Relative drifts of the conserved quantities between the first and last sample.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Drifts {
    pub mass: f64,
    pub energy: f64,
    pub ang_mom: f64,
    /// `max_t |l(t) - l(0) - int_0^t dl/ds ds|` relative to `max(|l(0)|, max_t |l(t) - l(0)|)`.
    pub amf_mismatch: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub rows: Vec<DiagnosticsRow>,
    /// Quadrature of `dl/dt` from `0` to each sample time.
    pub amf_integral: Vec<f64>,
    pub termination: Termination,
    pub drifts: Drifts,
    pub final_state: SimState,
    pub final_dt: f64,
}

impl Trajectory {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }
}

pub fn evolve(state: SimState, cfg: &EvolveConfig) -> Result<Trajectory> {
    evolve_with(state, cfg, |_, _| ControlFlow::Continue(()))
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Evolve to the horizon, calling `observer` on every sample. The observer may stop the
/// run early, which is reported as reaching the horizon.
pub fn evolve_with<F>(mut state: SimState, cfg: &EvolveConfig, mut observer: F) -> Result<Trajectory>
where
    F: FnMut(&SimState, &DiagnosticsRow) -> ControlFlow<()>,
{
    if !(cfg.horizon > 0.0 && cfg.dt > 0.0) || cfg.sample_every == 0 {
        return Err(Error::InvalidParams("horizon, dt and sample_every must be positive".into()));
    }
    let grid = state.field.grid().clone();
    let params = state.params.clone();
    let mut dt = cfg.dt;
    let mut prop = Propagator::with_nonlinearity(&grid, &params, dt, cfg.nonlinear)?;
    let first = diagnostics(&state, f64::INFINITY);
    let mut monitor = BlowupMonitor::new(&first, cfg.monitor);
    let mut rows = vec![first.clone()];
    let mut amf_integral = vec![0.0];
    let mut amf = 0.0;
    let mut rate = ang_mom_rate(&state.field, &params);
    let mut shrink_ref = first.grad_norm;
    let mut termination = Termination::HorizonReached;
    let t_end = state.t + cfg.horizon;
    let mut since_sample = 0usize;
    // Accumulated time carries roundoff; a sliver below this is treated as arrival.
    let slack = 1e-6 * dt;

    if observer(&state, &first).is_continue() {
        while state.t < t_end - slack {
            if state.t + dt > t_end + slack {
                prop = Propagator::with_nonlinearity(&grid, &params, t_end - state.t, cfg.nonlinear)?;
            }
            let h = prop.dt();
            prop.step(&mut state)?;
            let next_rate = ang_mom_rate(&state.field, &params);
            amf += 0.5 * h * (rate + next_rate);
            rate = next_rate;
            since_sample += 1;
            let last = state.t >= t_end - slack;
            if since_sample < cfg.sample_every && !last {
                continue;
            }
            since_sample = 0;
            let row = diagnostics(&state, monitor.l_running_min);
            let report = monitor.observe(&row);
            rows.push(row.clone());
            amf_integral.push(amf);
            match report.status {
                MonitorStatus::BlowupDetected => {
                    termination = Termination::BlowupDetected;
                    break;
                }
                MonitorStatus::ResolutionLost => {
                    termination = Termination::ResolutionLost;
                    break;
                }
                MonitorStatus::Running => {}
            }
            if observer(&state, &row).is_break() {
                break;
            }
            if let Some(s) = cfg.dt_shrink {
                if row.grad_norm > s.growth * shrink_ref && dt * 0.5 >= s.min_dt {
                    dt *= 0.5;
                    shrink_ref = row.grad_norm;
                    log::info!("gradient grew to {:.3e} at t = {:.6}; dt -> {dt:.3e}", row.grad_norm, state.t);
                }
            }
            if (prop.dt() - dt).abs() > 0.0 {
                prop = Propagator::with_nonlinearity(&grid, &params, dt, cfg.nonlinear)?;
            }
        }
    }

    let r0 = &rows[0].report;
    let r1 = &rows[rows.len() - 1].report;
    let l_scale = rows
        .iter()
        .map(|r| (r.report.ang_mom - r0.ang_mom).abs())
        .fold(r0.ang_mom.abs(), f64::max);
    let amf_mismatch = rows
        .iter()
        .zip(&amf_integral)
        .map(|(r, a)| (r.report.ang_mom - r0.ang_mom - a).abs())
        .fold(0.0, f64::max)
        / if l_scale > 0.0 { l_scale } else { 1.0 };
    let drifts = Drifts {
        mass: rel(r1.mass, r0.mass),
        energy: rel(r1.energy, r0.energy),
        ang_mom: rel(r1.ang_mom, r0.ang_mom),
        amf_mismatch,
    };
    Ok(Trajectory { rows, amf_integral, termination, drifts, final_state: state, final_dt: dt })
}
