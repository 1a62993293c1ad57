//! Scenario execution and artifact writing.

use std::fs;
use std::io::BufWriter;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use rotnls::classify::{
    check_gradient_lowerbound, classify_with_tol, estimate_l_isotropic, estimate_l_smalldata, estimate_l_trajectory, LMode,
    Verdict,
};
use rotnls::diagnostics::write_csv;
use rotnls::dynamics::{evolve, evolve_with, SimState, Termination, Trajectory};
use rotnls::groundstate::{
    certify, frequency_sweep, indicator_threshold, instability_indicator, minimize_local_with, minimize_nehari_with,
    wellposedness_gap, GroundState, LocalMinimizationSpec, SolverConfig,
};
use rotnls::qprofile::{load_or_solve, QProfile};
use rotnls::random::{rng_from_seed, smooth_random_field};
use rotnls::snapshot::{load_snapshot, save_snapshot, SnapshotHeader};
use rotnls::spectrum::lowest_eigenpair;
use rotnls::stability::{stability_experiment, StabilityOptions};
use rotnls::{ComplexField, Error, Grid, PhysicsParams, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, GroundStateSection, InitialData, Scenario};

/// How a scenario that ran to completion ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Completion {
    Done,
    BlowupTerminated,
}

/// Artifacts and summary values produced by a scenario.
#[derive(Debug, Default)]
pub struct Outputs {
    pub artifacts: Vec<String>,
    pub summary: serde_json::Map<String, Value>,
}

pub struct Context<'a> {
    pub cfg: &'a ExperimentConfig,
    pub out: PathBuf,
    pub outputs: Outputs,
}

impl<'a> Context<'a> {
    pub fn new(cfg: &'a ExperimentConfig, out: &Path) -> Self {
        Self { cfg, out: out.to_path_buf(), outputs: Outputs::default() }
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.outputs.artifacts.push(name.to_string());
        self.out.join(name)
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let path = self.path(name);
        fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
        Ok(())
    }

    fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.path(name);
        fs::write(path, text)?;
        Ok(())
    }

    fn note(&mut self, key: &str, value: impl Serialize) {
        self.outputs.summary.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    fn grid(&self) -> Result<Grid> {
        self.cfg.grid.build()
    }

    fn params(&self) -> &PhysicsParams {
        &self.cfg.physics
    }

    fn solver(&self) -> SolverConfig {
        let mut s = SolverConfig::new(self.cfg.solver.tol);
        s.max_iterations = self.cfg.solver.max_iterations;
        s
    }

    pub fn q_cache_dir(&self) -> PathBuf {
        self.cfg.solver.q_cache.clone().unwrap_or_else(|| self.out.join("cache"))
    }

    fn q_profile(&mut self) -> Result<QProfile> {
        let p = self.params();
        let (q, hit) = load_or_solve(&self.q_cache_dir(), p.dim, p.p, self.cfg.solver.q_tol)?;
        self.note("q_cache_hit", hit);
        Ok(q)
    }

    fn header(&self, t: f64) -> SnapshotHeader {
        let p = self.params();
        SnapshotHeader { gammas: p.gammas.clone(), omega_rot: p.omega_rot, p: p.p, t }
    }
}

pub fn run(ctx: &mut Context, scenario: Scenario) -> Result<Completion> {
    fs::create_dir_all(&ctx.out)?;
    match scenario {
        Scenario::QReference => q_reference(ctx),
        Scenario::Spectrum => spectrum(ctx),
        Scenario::Groundstate => groundstate(ctx),
        Scenario::Evolve => evolve_scenario(ctx),
        Scenario::Classify => classify_scenario(ctx),
        Scenario::Stability => stability(ctx),
        Scenario::Sweep => sweep(ctx),
        Scenario::Ls1Trend => ls1_trend(ctx),
    }
}

/// Solve or load Q for `(dim, p)` and write it as `q_profile.json`.
pub fn q_reference(ctx: &mut Context) -> Result<Completion> {
    let q = ctx.q_profile()?;
    ctx.write_text("q_profile.json", &(q.to_json()? + "\n"))?;
    ctx.note("mass", q.mass);
    ctx.note("c_gn", q.c_gn);
    Ok(Completion::Done)
}

fn spectrum(ctx: &mut Context) -> Result<Completion> {
    let grid = ctx.grid()?;
    let eig = lowest_eigenpair(&grid, ctx.params(), ctx.cfg.solver.eigen_tol)?;
    ctx.write_json("spectrum.json", &eig.summary())?;
    let header = ctx.header(0.0);
    save_snapshot(&ctx.path("eigenfield.rnls"), &eig.eigenfield, &header)?;
    ctx.note("lambda0", eig.lambda0);
    Ok(Completion::Done)
}

fn solve_ground_state(ctx: &mut Context, section: GroundStateSection) -> Result<GroundState> {
    let grid = ctx.grid()?;
    let params = ctx.params().clone();
    let solver = ctx.solver();
    match section {
        GroundStateSection::Nehari { omega } => minimize_nehari_with(omega, &params, &grid, &solver),
        GroundStateSection::Local { q, r } => {
            let c_gn = ctx.q_profile()?.c_gn;
            let spec = LocalMinimizationSpec::new(q, r, &params, c_gn)?;
            if q < 1.0 {
                let gap = wellposedness_gap(&spec, &params, c_gn, q)?;
                ctx.write_json("gap.json", &gap)?;
            }
            minimize_local_with(&spec, &params, &grid, &solver)
        }
    }
}

fn save_ground_state(ctx: &mut Context, gs: &GroundState, stem: &str) -> Result<()> {
    let cert = certify(gs)?;
    gs.save(&ctx.out, stem, Some(cert))?;
    ctx.outputs.artifacts.push(format!("{stem}.rnls"));
    ctx.outputs.artifacts.push(format!("{stem}.json"));
    ctx.note("certified", cert.passed);
    ctx.note("omega", gs.omega);
    ctx.note("residual", gs.residual);
    Ok(())
}

fn groundstate(ctx: &mut Context) -> Result<Completion> {
    let section = ctx.cfg.groundstate.ok_or_else(|| missing("groundstate"))?;
    let gs = solve_ground_state(ctx, section)?;
    save_ground_state(ctx, &gs, "ground_state")?;
    ctx.note("instability_indicator", instability_indicator(&gs)?);
    Ok(Completion::Done)
}

fn missing(section: &str) -> Error {
    Error::InvalidParams(format!("missing [{section}] section"))
}

/// Build the initial datum described by `[initial]`; randomness comes from the run seed.
pub fn initial_field(cfg: &ExperimentConfig, grid: &Grid) -> Result<ComplexField> {
    match cfg.initial.as_ref().ok_or_else(|| missing("initial"))? {
        InitialData::Gaussian { amplitude, width, center, charge } => {
            let c: Vec<f64> = (0..3).map(|j| center.get(j).copied().unwrap_or(0.0)).collect();
            let (a, w, m) = (*amplitude, *width, *charge);
            Ok(ComplexField::from_fn(grid, |x| {
                let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
                let r2 = d[0] * d[0] + d[1] * d[1] + d[2] * d[2];
                let envelope = a * (-0.5 * r2 / (w * w)).exp();
                if m == 0 {
                    Complex64::new(envelope, 0.0)
                } else {
                    // A charge-m vortex vanishes like rho^|m| on the rotation axis.
                    let rho = (d[0] * d[0] + d[1] * d[1]).sqrt() / w;
                    Complex64::from_polar(envelope * rho.powi(m.abs()), m as f64 * d[1].atan2(d[0]))
                }
            }))
        }
        InitialData::Random { bumps, mass } => {
            let mut rng = rng_from_seed(cfg.seed);
            let f = smooth_random_field(grid, &mut rng, *bumps);
            Ok(f.scaled((mass / f.mass()).sqrt()))
        }
        InitialData::Snapshot { path } => {
            let (f, _) = load_snapshot(path)?;
            if f.grid().spec() != grid.spec() {
                return Err(Error::GridMismatch);
            }
            Ok(f)
        }
    }
}

#[derive(Serialize)]
struct TrajectoryMeta<'a> {
    dt: f64,
    final_dt: f64,
    horizon: f64,
    sample_every: usize,
    grid: rotnls::GridSpec,
    params: &'a PhysicsParams,
    termination: Termination,
    drifts: rotnls::dynamics::Drifts,
    samples: usize,
    final_time: f64,
    steps: u64,
    snapshots: Vec<String>,
}

fn run_trajectory(ctx: &mut Context, u0: ComplexField) -> Result<Trajectory> {
    let ev = ctx.cfg.evolve.clone().ok_or_else(|| missing("evolve"))?;
    let state = SimState::new(u0, ctx.params().clone())?;
    let mut snapshots = Vec::new();
    let tr = if ev.snapshot_every == 0 {
        evolve(state, &ev.to_config())?
    } else {
        let dir = ctx.out.join("snapshots");
        fs::create_dir_all(&dir)?;
        let header = ctx.header(0.0);
        let mut sample = 0usize;
        let mut failure = None;
        let tr = evolve_with(state, &ev.to_config(), |s, _| {
            if sample % ev.snapshot_every == 0 {
                let name = format!("snapshots/sample_{sample:06}.rnls");
                let h = SnapshotHeader { t: s.t, ..header.clone() };
                if let Err(e) = save_snapshot(&ctx.out.join(&name), &s.field, &h) {
                    failure = Some(e);
                    return ControlFlow::Break(());
                }
                snapshots.push(name);
            }
            sample += 1;
            ControlFlow::Continue(())
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        tr
    };
    ctx.outputs.artifacts.extend(snapshots.iter().cloned());

    let file = fs::File::create(ctx.path("trajectory.csv"))?;
    write_csv(BufWriter::new(file), &tr.rows)?;
    let meta = TrajectoryMeta {
        dt: ev.dt,
        final_dt: tr.final_dt,
        horizon: ev.horizon,
        sample_every: ev.sample_every,
        grid: tr.final_state.field.grid().spec(),
        params: ctx.params(),
        termination: tr.termination,
        drifts: tr.drifts,
        samples: tr.rows.len(),
        final_time: tr.final_state.t,
        steps: tr.final_state.step_count,
        snapshots,
    };
    let meta = serde_json::to_value(&meta)?;
    ctx.write_json("trajectory.json", &meta)?;
    let header = ctx.header(tr.final_state.t);
    save_snapshot(&ctx.path("final.rnls"), &tr.final_state.field, &header)?;
    ctx.note("termination", tr.termination);
    ctx.note("drifts", tr.drifts);
    Ok(tr)
}

fn evolve_scenario(ctx: &mut Context) -> Result<Completion> {
    let grid = ctx.grid()?;
    let u0 = initial_field(ctx.cfg, &grid)?;
    let tr = run_trajectory(ctx, u0)?;
    Ok(if tr.termination == Termination::BlowupDetected { Completion::BlowupTerminated } else { Completion::Done })
}

fn classify_scenario(ctx: &mut Context) -> Result<Completion> {
    let grid = ctx.grid()?;
    let params = ctx.params().clone();
    let u0 = initial_field(ctx.cfg, &grid)?;
    let q = ctx.q_profile()?;
    let settings = ctx.cfg.classify.clone();
    let trajectory = if ctx.cfg.evolve.is_some() { Some(run_trajectory(ctx, u0.clone())?) } else { None };
    let l = match settings.l_mode {
        LMode::IsotropicExact => estimate_l_isotropic(&u0, &params)?,
        LMode::SmalldataBound => estimate_l_smalldata(&u0, &params, q.c_gn, settings.sigma_threshold)?,
        LMode::TrajectoryMin => estimate_l_trajectory(&trajectory.as_ref().ok_or_else(|| missing("evolve"))?.rows)?,
    };
    let report = classify_with_tol(&u0, &params, &q, &l, settings.boundary_tol)?;
    ctx.write_json("classification.json", &json!({ "report": report, "l_estimate": l }))?;
    if let (Some(tr), Verdict::NegativeEnergyBlowup) = (&trajectory, report.verdict) {
        let tail = ctx.cfg.evolve.as_ref().map(|e| e.monitor.tail_threshold).unwrap_or(0.01);
        let samples = check_gradient_lowerbound(&tr.rows, &report, tail)?;
        ctx.note("lower_bound_holds", samples.iter().all(|s| s.pass));
        ctx.write_json("lower_bound.json", &samples)?;
    }
    ctx.note("verdict", report.verdict);
    Ok(Completion::Done)
}

fn stability(ctx: &mut Context) -> Result<Completion> {
    let section = ctx.cfg.groundstate.ok_or_else(|| missing("groundstate"))?;
    let st = ctx.cfg.stability.clone().ok_or_else(|| missing("stability"))?;
    let ev = ctx.cfg.evolve.clone().ok_or_else(|| missing("evolve"))?;
    let gs = solve_ground_state(ctx, section)?;
    save_ground_state(ctx, &gs, "ground_state")?;
    let opts = StabilityOptions { evolve: ev.to_config(), seed: ctx.cfg.seed, directions: st.directions.clone() };
    let report = stability_experiment(&gs, &st.deltas, &opts)?;
    ctx.note("linear_spread", report.linear_spread());
    ctx.note("scaling_escapes", report.scaling_escapes(10.0));
    let threshold = indicator_threshold(&gs.params);
    ctx.write_json("stability.json", &json!({ "report": report, "indicator_threshold": threshold }))?;
    Ok(Completion::Done)
}

pub const SWEEP_HEADER: &str = "q,r,omega,lambda0,omega_minus_lambda0,energy,mass,action,residual,certified";

fn sweep(ctx: &mut Context) -> Result<Completion> {
    let sw = ctx.cfg.sweep.clone().ok_or_else(|| missing("sweep"))?;
    let grid = ctx.grid()?;
    let params = ctx.params().clone();
    let c_gn = ctx.q_profile()?.c_gn;
    let solver = ctx.solver();
    let states: Vec<Result<GroundState>> = sw
        .qs
        .par_iter()
        .map(|&q| {
            let spec = LocalMinimizationSpec::new(q, sw.r, &params, c_gn)?;
            minimize_local_with(&spec, &params, &grid, &solver)
        })
        .collect();
    let mut csv = String::from(SWEEP_HEADER);
    csv.push('\n');
    for (i, (q, gs)) in sw.qs.iter().zip(states).enumerate() {
        let gs = gs?;
        let cert = certify(&gs)?;
        let stem = format!("ground_state_{i:03}");
        gs.save(&ctx.out, &stem, Some(cert))?;
        ctx.outputs.artifacts.push(format!("{stem}.rnls"));
        ctx.outputs.artifacts.push(format!("{stem}.json"));
        csv += &format!(
            "{q:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}\n",
            sw.r,
            gs.omega,
            gs.lambda0,
            gs.omega - gs.lambda0,
            gs.energy,
            gs.mass,
            gs.action,
            gs.residual,
            cert.passed
        );
    }
    ctx.write_text("sweep.csv", &csv)?;
    Ok(Completion::Done)
}

pub const LS1_HEADER: &str =
    "omega,quantity,scaled_potential,scaled_ang_mom,lp1,indicator_scaled,residual,nonradial_fraction";

fn ls1_trend(ctx: &mut Context) -> Result<Completion> {
    let ls = ctx.cfg.ls1.clone().ok_or_else(|| missing("ls1"))?;
    let grid = ctx.grid()?;
    let eta = 0.1 * ctx.q_profile()?.lp1;
    let points = frequency_sweep(ctx.params(), &ls.omegas, &grid, ctx.cfg.solver.tol)?;
    let mut csv = String::from(LS1_HEADER);
    csv.push('\n');
    for p in &points {
        csv += &format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            p.omega, p.quantity, p.scaled_potential, p.scaled_ang_mom, p.lp1, p.indicator_scaled, p.residual, p.nonradial_fraction
        );
    }
    ctx.write_text("ls1_trend.csv", &csv)?;
    let decreasing = points.windows(2).all(|w| w[1].quantity < w[0].quantity);
    let below = points.iter().any(|p| p.quantity < eta);
    ctx.note("strictly_decreasing", decreasing);
    ctx.note("falls_below_eta", below);
    ctx.note("eta", eta);
    Ok(Completion::Done)
}
