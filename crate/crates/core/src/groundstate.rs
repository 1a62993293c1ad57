//! Variational ground states: Nehari minimization at fixed frequency and local
//! minimization on the mass sphere inside an `H`-ball, plus rescaling and certification.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField, RealField};
use crate::functionals::{
    apply_quadratic_operator, evaluate, potential_field, sigma_norm2, stationary_operator, FunctionalReport,
    StationaryFunctionals,
};
use crate::grid::Grid;
use crate::optim::{self, Eval, Problem};
use crate::params::PhysicsParams;
use crate::snapshot::{save_snapshot, SnapshotHeader};
use crate::spectral;
use crate::spectrum::lowest_eigenpair;

/// Which variational problem produced a state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Nehari { omega: f64 },
    Local { q: f64, r: f64 },
}

#[derive(Debug, Clone)]
pub struct GroundState {
    pub field: ComplexField,
    pub params: PhysicsParams,
    pub omega: f64,
    pub source: Source,
    pub action: f64,
    pub d_omega: Option<f64>,
    pub energy: f64,
    pub mass: f64,
    pub h_norm2: f64,
    pub lp1: f64,
    pub residual: f64,
    pub nehari_residual: f64,
    pub sigma_norm: f64,
    pub iterations: usize,
    pub lambda0: f64,
}

/// Everything in [`GroundState`] except the samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStateMeta {
    pub params: PhysicsParams,
    pub omega: f64,
    pub source: Source,
    pub action: f64,
    pub d_omega: Option<f64>,
    pub energy: f64,
    pub mass: f64,
    pub h_norm2: f64,
    pub lp1: f64,
    pub residual: f64,
    pub nehari_residual: f64,
    pub sigma_norm: f64,
    pub iterations: usize,
    pub lambda0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certification: Option<CertificationReport>,
}

impl GroundState {
    pub fn meta(&self, certification: Option<CertificationReport>) -> GroundStateMeta {
        GroundStateMeta {
            params: self.params.clone(),
            omega: self.omega,
            source: self.source,
            action: self.action,
            d_omega: self.d_omega,
            energy: self.energy,
            mass: self.mass,
            h_norm2: self.h_norm2,
            lp1: self.lp1,
            residual: self.residual,
            nehari_residual: self.nehari_residual,
            sigma_norm: self.sigma_norm,
            iterations: self.iterations,
            lambda0: self.lambda0,
            certification,
        }
    }

    /// Writes `<stem>.rnls` and `<stem>.json` into `dir`.
    pub fn save(&self, dir: &Path, stem: &str, certification: Option<CertificationReport>) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let header = SnapshotHeader {
            gammas: self.params.gammas.clone(),
            omega_rot: self.params.omega_rot,
            p: self.params.p,
            t: 0.0,
        };
        save_snapshot(&dir.join(format!("{stem}.rnls")), &self.field, &header)?;
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&self.meta(certification))?)?;
        Ok(())
    }
}

/// Solver controls shared by both minimizations.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Stop when the stationary residual is below `tol * ||phi||_Sigma`.
    pub tol: f64,
    pub max_iterations: usize,
    /// Known `lambda_0`; computed from the spectrum when absent.
    pub lambda0: Option<f64>,
    pub initial: Option<ComplexField>,
}

impl SolverConfig {
    pub fn new(tol: f64) -> Self {
        Self { tol, max_iterations: 20_000, lambda0: None, initial: None }
    }
}

fn lambda0_for(grid: &Grid, params: &PhysicsParams, known: Option<f64>) -> Result<f64> {
    match known {
        Some(l) => Ok(l),
        None => Ok(lowest_eigenpair(grid, params, 1e-10)?.lambda0),
    }
}

fn nonlinear_term(u: &ComplexField, p: f64) -> ComplexField {
    u.map(|z| z * z.norm().powf(p - 1.0))
}

fn tangent_to(u: &ComplexField, d: &ComplexField) -> ComplexField {
    let m = u.mass();
    if m == 0.0 {
        return d.clone();
    }
    let c = d.inner(u).re / m;
    d.lincomb(1.0, -c, u)
}

/// `kappa_0 f` on the Nehari manifold `I_omega = 0`, with `kappa_0`.
pub fn nehari_project(f: &ComplexField, omega: f64, params: &PhysicsParams) -> Result<(ComplexField, f64)> {
    let r = evaluate(f, params)?;
    nehari_scale(f, omega, params, r.quad_form, r.mass, r.lp1)
}

fn nehari_scale(f: &ComplexField, omega: f64, params: &PhysicsParams, quad: f64, mass: f64, lp1: f64) -> Result<(ComplexField, f64)> {
    if !(lp1 > 0.0) {
        return Err(Error::Degenerate("zero nonlinearity norm".into()));
    }
    let h = quad + omega * mass;
    if !(h > 0.0) {
        return Err(Error::Degenerate(format!("form value t[u] + omega M(u) = {h:.3e} is not positive")));
    }
    let kappa = (h / (2.0 * lp1)).powf(1.0 / (params.p - 1.0));
    Ok((f.scaled(kappa), kappa))
}

struct Nehari<'a> {
    params: &'a PhysicsParams,
    omega: f64,
    potential: RealField,
    shift: f64,
}

impl Nehari<'_> {
    fn parts(&self, u: &ComplexField) -> Result<(f64, f64, f64, ComplexField)> {
        let ru = apply_quadratic_operator(u, self.params, &self.potential)?;
        let quad = ru.inner(u).re;
        Ok((quad, u.mass(), u.lp_norm_pow(self.params.p + 1.0), ru))
    }
}

impl Problem for Nehari<'_> {
    fn evaluate(&self, u: &ComplexField) -> Result<Eval> {
        let p = self.params.p;
        let (quad, mass, lp1, ru) = self.parts(u)?;
        let h = quad + self.omega * mass;
        // Scale-invariant form of the action on the Nehari manifold.
        let value = (p - 1.0) / (p + 1.0) * (0.5 * h).powf((p + 1.0) / (p - 1.0)) / lp1.powf(2.0 / (p - 1.0));
        let nl = nonlinear_term(u, p);
        let grad = ComplexField::new(
            u.grid(),
            ru.values()
                .iter()
                .zip(u.values())
                .zip(nl.values())
                .map(|((a, b), c)| a + b * self.omega - c * 2.0)
                .collect(),
        )?;
        let residual = grad.mass().sqrt();
        Ok(Eval { value, grad, residual, scale: sigma_norm2(u).sqrt() })
    }

    fn precondition(&self, u: &ComplexField, grad: &ComplexField) -> ComplexField {
        let c = self.shift;
        tangent_to(u, &spectral::apply_multiplier(grad, |k2| 1.0 / (k2 + c)))
    }

    fn tangent(&self, u: &ComplexField, d: &ComplexField) -> ComplexField {
        tangent_to(u, d)
    }

    fn retract(&self, u: &ComplexField, d: &ComplexField, alpha: f64) -> Result<(ComplexField, f64)> {
        let v = u.lincomb(1.0, alpha, d);
        let (quad, mass, lp1, _) = self.parts(&v)?;
        nehari_scale(&v, self.omega, self.params, quad, mass, lp1)
    }
}

fn default_seed(grid: &Grid, params: &PhysicsParams, omega: f64) -> ComplexField {
    let w = omega.max(0.0);
    let g = params.gammas.clone();
    ComplexField::from_fn(grid, |x| {
        Complex64::new((-0.5 * g.iter().zip(x).map(|(gj, xj)| (gj + w) * xj * xj).sum::<f64>()).exp(), 0.0)
    })
}

pub fn minimize_nehari(omega: f64, params: &PhysicsParams, grid: &Grid, tol: f64) -> Result<GroundState> {
    minimize_nehari_with(omega, params, grid, &SolverConfig::new(tol))
}

pub fn minimize_nehari_with(omega: f64, params: &PhysicsParams, grid: &Grid, cfg: &SolverConfig) -> Result<GroundState> {
    params.validate()?;
    params.require_slow_rotation()?;
    let lambda0 = lambda0_for(grid, params, cfg.lambda0)?;
    if !(omega > lambda0) {
        return Err(Error::Regime(format!("omega = {omega} must exceed lambda_0 = {lambda0}")));
    }
    let problem = Nehari { params, omega, potential: potential_field(grid, params)?, shift: omega.max(0.0) + 1.0 };
    let seed = cfg.initial.clone().unwrap_or_else(|| default_seed(grid, params, omega));
    let opts = optim::Options { tol: cfg.tol, max_iterations: cfg.max_iterations, ..Default::default() };
    let out = optim::minimize(&problem, &seed, &opts, "nehari-minimization")?;
    let (field, _) = nehari_project(&out.point, omega, params)?;
    finish(field, params, omega, Source::Nehari { omega }, out.iterations, lambda0)
}

fn finish(field: ComplexField, params: &PhysicsParams, omega: f64, source: Source, iterations: usize, lambda0: f64) -> Result<GroundState> {
    let report = evaluate(&field, params)?;
    let sf = StationaryFunctionals::from_report(&report, params, omega);
    let potential = potential_field(field.grid(), params)?;
    let residual = stationary_operator(&field, params, omega, &potential)?.mass().sqrt();
    let d_omega = match source {
        Source::Nehari { .. } => Some(sf.action),
        Source::Local { .. } => None,
    };
    Ok(GroundState {
        omega,
        source,
        action: sf.action,
        d_omega,
        energy: report.energy,
        mass: report.mass,
        h_norm2: report.quad_form,
        lp1: report.lp1,
        residual,
        nehari_residual: sf.nehari.abs(),
        sigma_norm: report.sigma_norm2.sqrt(),
        iterations,
        lambda0,
        params: params.clone(),
        field,
    })
}

/// Data of the local problem `inf { E(u) : M(u) = q, t[u] <= r }`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalMinimizationSpec {
    pub q: f64,
    pub r: f64,
    pub q0_estimate: f64,
    pub chi: f64,
    pub delta: f64,
}

/// `C` in `E(u) >= t/2 - C q^chi t^{1+delta}` with `t = t[u]`, from the sharp GN
/// constant and `||grad u||^2 <= gamma^2/(gamma^2 - Omega^2) t[u]`.
pub fn ball_constant(params: &PhysicsParams, c_gn: f64) -> f64 {
    let g2 = params.gamma().powi(2);
    let w2 = params.omega_rot.powi(2);
    2.0 * c_gn / (params.p + 1.0) * (g2 / (g2 - w2)).powf(params.gn_gradient_power() / 2.0)
}

impl LocalMinimizationSpec {
    pub fn new(q: f64, r: f64, params: &PhysicsParams, c_gn: f64) -> Result<Self> {
        params.require_supercritical()?;
        params.require_slow_rotation()?;
        if !(q > 0.0 && r > 0.0) {
            return Err(Error::InvalidParams("q and r must be positive".into()));
        }
        let n = params.dim as f64;
        let p = params.p;
        let chi = 0.5 * (p + 1.0 - n * (p - 1.0) / 2.0);
        let delta = (n * (p - 1.0) - 4.0) / 4.0;
        let c = ball_constant(params, c_gn);
        let q0_estimate = (6.0 * c * r.powf(delta)).powf(-1.0 / chi);
        Ok(Self { q, r, q0_estimate, chi, delta })
    }
}

/// Terms of the well-posedness gap of the local problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    /// `Phi_q(qr/2) = qr/4`.
    pub phi_at_qr2: f64,
    /// `inf_{t in (rq, r)} Gamma_q(t)`.
    pub gamma_inf: f64,
    pub gap: f64,
    /// Largest `q` with `Gamma_q(t) >= t/3` on `(0, r)`.
    pub q0: f64,
}

pub fn wellposedness_gap(spec: &LocalMinimizationSpec, params: &PhysicsParams, c_gn: f64, q_probe: f64) -> Result<GapReport> {
    params.require_supercritical()?;
    params.require_slow_rotation()?;
    if !(q_probe > 0.0 && q_probe < 1.0) {
        return Err(Error::InvalidParams(format!("q = {q_probe} leaves the interval (rq, r) empty")));
    }
    let c = ball_constant(params, c_gn);
    let (r, q) = (spec.r, q_probe);
    let gamma = |t: f64| 0.5 * t * (1.0 - 2.0 * c * q.powf(spec.chi) * t.powf(spec.delta));
    // Gamma_q is concave in t, so its infimum over an interval sits at an endpoint.
    let gamma_inf = gamma(r * q).min(gamma(r));
    let phi_at_qr2 = 0.25 * q * r;
    Ok(GapReport {
        phi_at_qr2,
        gamma_inf,
        gap: gamma_inf - phi_at_qr2,
        q0: (6.0 * c * r.powf(spec.delta)).powf(-1.0 / spec.chi),
    })
}

struct Local<'a> {
    params: &'a PhysicsParams,
    q: f64,
    r: f64,
    potential: RealField,
    shift: f64,
}

impl Problem for Local<'_> {
    fn evaluate(&self, u: &ComplexField) -> Result<Eval> {
        let p = self.params.p;
        let ru = apply_quadratic_operator(u, self.params, &self.potential)?;
        let quad = ru.inner(u).re;
        let mass = u.mass();
        let lp1 = u.lp_norm_pow(p + 1.0);
        let omega = (-quad + 2.0 * lp1) / mass;
        let nl = nonlinear_term(u, p);
        let grad = ComplexField::new(
            u.grid(),
            ru.values()
                .iter()
                .zip(u.values())
                .zip(nl.values())
                .map(|((a, b), c)| a + b * omega - c * 2.0)
                .collect(),
        )?;
        let residual = grad.mass().sqrt();
        Ok(Eval { value: 0.5 * quad - 2.0 / (p + 1.0) * lp1, grad, residual, scale: sigma_norm2(u).sqrt() })
    }

    fn precondition(&self, u: &ComplexField, grad: &ComplexField) -> ComplexField {
        let c = self.shift;
        tangent_to(u, &spectral::apply_multiplier(grad, |k2| 1.0 / (k2 + c)))
    }

    fn tangent(&self, u: &ComplexField, d: &ComplexField) -> ComplexField {
        tangent_to(u, d)
    }

    fn retract(&self, u: &ComplexField, d: &ComplexField, alpha: f64) -> Result<(ComplexField, f64)> {
        let v = u.lincomb(1.0, alpha, d);
        let m = v.mass();
        if m == 0.0 {
            return Err(Error::Degenerate("iterate collapsed to zero".into()));
        }
        let s = (self.q / m).sqrt();
        Ok((v.scaled(s), s))
    }

    fn admit(&self, u: &ComplexField, _eval: &Eval) -> Result<()> {
        let quad = apply_quadratic_operator(u, self.params, &self.potential)?.inner(u).re;
        if quad > self.r {
            return Err(Error::LeftBall { h_norm2: quad, radius: self.r });
        }
        Ok(())
    }
}

pub fn minimize_local(spec: &LocalMinimizationSpec, params: &PhysicsParams, grid: &Grid, tol: f64) -> Result<GroundState> {
    minimize_local_with(spec, params, grid, &SolverConfig::new(tol))
}

pub fn minimize_local_with(spec: &LocalMinimizationSpec, params: &PhysicsParams, grid: &Grid, cfg: &SolverConfig) -> Result<GroundState> {
    params.validate()?;
    params.require_slow_rotation()?;
    params.require_supercritical()?;
    let (lambda0, eigenfield) = match (cfg.lambda0, &cfg.initial) {
        (Some(l), Some(_)) => (l, None),
        _ => {
            let e = lowest_eigenpair(grid, params, 1e-10)?;
            (e.lambda0, Some(e.eigenfield))
        }
    };
    if spec.q > spec.r / (-lambda0) {
        return Err(Error::Regime(format!(
            "q = {} exceeds r/(-lambda_0) = {}: the constraint set is empty",
            spec.q,
            spec.r / (-lambda0)
        )));
    }
    if spec.q >= spec.q0_estimate {
        return Err(Error::Regime(format!("q = {} is not below q0 = {}", spec.q, spec.q0_estimate)));
    }
    let seed = match &cfg.initial {
        Some(f) => f.clone(),
        None => eigenfield.expect("computed above").scaled(spec.q.sqrt()),
    };
    let problem = Local {
        params,
        q: spec.q,
        r: spec.r,
        potential: potential_field(grid, params)?,
        shift: (-lambda0).max(1.0),
    };
    let opts = optim::Options { tol: cfg.tol, max_iterations: cfg.max_iterations, ..Default::default() };
    let out = optim::minimize(&problem, &seed, &opts, "local-minimization")?;
    let report = evaluate(&out.point, params)?;
    let omega = (-report.quad_form + 2.0 * report.lp1) / report.mass;
    finish(out.point, params, omega, Source::Local { q: spec.q, r: spec.r }, out.iterations, lambda0)
}

/// A ground state mapped to unit frequency, `phi(x) = omega^{1/(p-1)} phi~(sqrt(omega) x)`.
#[derive(Debug, Clone)]
pub struct Rescaled {
    pub field: ComplexField,
    pub omega: f64,
    /// `phi~` functionals with the original trap and rotation.
    pub report: FunctionalReport,
    /// Both sides of the ratio identity between `phi` and `phi~`.
    pub ratio_original: f64,
    pub ratio_rescaled: f64,
    /// `M(phi) / (omega^{2/(p-1) - N/2} M(phi~)) - 1`.
    pub mass_scaling_error: f64,
    /// `l(phi) / (omega^{2/(p-1) - N/2} l(phi~)) - 1`.
    pub ang_mom_scaling_error: f64,
    /// Residual of the unit-frequency equation relative to `||phi~||_Sigma`.
    pub nie_residual: f64,
    /// Rescaled Pohozaev identity, relative to the sum of its term magnitudes.
    pub ew1_residual: f64,
}

impl Rescaled {
    /// `omega^{-2} int V |phi~|^2`.
    pub fn scaled_potential(&self) -> f64 {
        self.report.potential / (self.omega * self.omega)
    }

    /// `omega^{-1} l(phi~)`.
    pub fn scaled_ang_mom(&self) -> f64 {
        self.report.ang_mom / self.omega
    }

    /// `omega^{-2} int V |phi~|^2 + 2 omega^{-1} l(phi~)`.
    pub fn trap_rotation_quantity(&self) -> f64 {
        self.scaled_potential() + 2.0 * self.scaled_ang_mom()
    }
}

/// Parameters of the unit-frequency problem: trap `gamma/omega`, rotation `Omega/omega`.
pub fn unit_frequency_params(params: &PhysicsParams, omega: f64) -> PhysicsParams {
    PhysicsParams {
        gammas: params.gammas.iter().map(|g| g / omega).collect(),
        omega_rot: params.omega_rot / omega,
        ..params.clone()
    }
}

/// Rescale onto `target`, or by default onto the source grid stretched by `sqrt(omega)`
/// (where the map is an exact relabelling of samples).
pub fn rescale_to_unit_frequency(gs: &GroundState, target: Option<&Grid>) -> Result<Rescaled> {
    let omega = gs.omega;
    if !(omega > 0.0) {
        return Err(Error::Regime(format!("rescaling needs omega > 0, got {omega}")));
    }
    let params = &gs.params;
    let p = params.p;
    let n = params.dim as f64;
    let amp = omega.powf(-1.0 / (p - 1.0));
    let field = match target {
        None => {
            let grid = gs.field.grid().scaled(omega.sqrt())?;
            ComplexField::new(&grid, gs.field.values().iter().map(|z| z * amp).collect())?
        }
        Some(t) => {
            let s = 1.0 / omega.sqrt();
            let (f, outside) = spectral::resample_stretched(&gs.field, t, &vec![s; params.dim])?;
            if outside > 1e-8 {
                return Err(Error::Aliasing { fraction: outside });
            }
            f.scaled(amp)
        }
    };
    let orig = evaluate(&gs.field, params)?;
    let report = evaluate(&field, params)?;
    let factor = omega.powf(2.0 / (p - 1.0) - n / 2.0);
    let mass_scaling_error = orig.mass / (factor * report.mass) - 1.0;
    // Radial states carry l = 0 up to roundoff, so the relative error is floored.
    let ang_mom_scaling_error =
        (orig.ang_mom - factor * report.ang_mom) / (factor * report.ang_mom.abs().max(1e-6 * report.mass));
    let ratio_original = (orig.potential + 2.0 * orig.ang_mom) / orig.lp1;
    let ratio_rescaled = (report.potential / (omega * omega) + 2.0 * report.ang_mom / omega) / report.lp1;

    let unit = unit_frequency_params(params, omega);
    let v_unit = potential_field(field.grid(), &unit)?;
    let nie = stationary_operator(&field, &unit, 1.0, &v_unit)?.mass().sqrt();
    let nie_residual = nie / report.sigma_norm2.sqrt();
    let c = n * (p - 1.0) / (p + 1.0);
    let vt = report.potential / (omega * omega);
    let ew1 = report.kinetic - vt - c * report.lp1;
    let ew1_residual = ew1.abs() / (report.kinetic + vt + c * report.lp1);
    Ok(Rescaled {
        field,
        omega,
        report,
        ratio_original,
        ratio_rescaled,
        mass_scaling_error,
        ang_mom_scaling_error,
        nie_residual,
        ew1_residual,
    })
}

/// One point of a large-frequency sweep, computed directly on the unit-frequency problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub omega: f64,
    /// `omega^{-2} int V |phi~|^2 + 2 omega^{-1} l(phi~)`.
    pub quantity: f64,
    pub scaled_potential: f64,
    pub scaled_ang_mom: f64,
    pub lp1: f64,
    /// Instability indicator of `phi_omega` divided by `omega^{(p+1)/(p-1) - N/2}`.
    pub indicator_scaled: f64,
    pub residual: f64,
    pub nonradial_fraction: f64,
}

/// Ground states `phi~_omega` of the unit-frequency problem for each `omega`.
pub fn frequency_sweep(params: &PhysicsParams, omegas: &[f64], grid: &Grid, tol: f64) -> Result<Vec<SweepPoint>> {
    let n = params.dim as f64;
    let p = params.p;
    let c = n * (p - 1.0) / (p + 1.0) * (n * (p - 1.0) / 2.0 - 2.0);
    let mut out = Vec::with_capacity(omegas.len());
    let mut seed: Option<ComplexField> = None;
    for &omega in omegas {
        if !(omega > 0.0) {
            return Err(Error::InvalidParams(format!("sweep frequencies must be positive, got {omega}")));
        }
        let unit = unit_frequency_params(params, omega);
        let mut cfg = SolverConfig::new(tol);
        cfg.initial = seed.take();
        let gs = minimize_nehari_with(1.0, &unit, grid, &cfg)?;
        let r = evaluate(&gs.field, &unit)?;
        let rmax = grid.half_widths().iter().cloned().fold(f64::INFINITY, f64::min);
        out.push(SweepPoint {
            omega,
            quantity: r.potential + 2.0 * r.ang_mom,
            scaled_potential: r.potential,
            scaled_ang_mom: r.ang_mom,
            lp1: r.lp1,
            indicator_scaled: 4.0 * r.potential - c * r.lp1,
            residual: gs.residual,
            nonradial_fraction: if params.dim == 2 { nonradial_fraction(&gs.field, 0.8 * rmax, 64, 64) } else { 0.0 },
        });
        seed = Some(gs.field);
    }
    Ok(out)
}

/// Pohozaev residuals and the trap/rotation inequalities of a ground state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    /// `|K - V - N(p-1)/(p+1) lp1|` relative to the sum of term magnitudes.
    pub pohozaev_residual: f64,
    pub stationary_residual: f64,
    pub nehari_residual: f64,
    /// The following need `omega > 0`.
    pub ew1_residual: Option<f64>,
    /// RHS - LHS of the lower bound on `-(omega^{-2} V~ + 2 omega^{-1} l~)`.
    pub sni_slack: Option<f64>,
    /// `2 gamma^2/(gamma^2 - Omega^2) lp1~ - omega^{-2} V~`.
    pub ew2_slack: Option<f64>,
    /// `Omega^2/gamma^2 K~ + omega^{-2} V~ + 2 omega^{-1} l~`.
    pub er1_slack: Option<f64>,
    pub passed: bool,
}

pub const CERT_RESIDUAL_TOL: f64 = 1e-5;
pub const CERT_SLACK_TOL: f64 = 1e-8;

pub fn certify(gs: &GroundState) -> Result<CertificationReport> {
    let params = &gs.params;
    let p = params.p;
    let n = params.dim as f64;
    let c = n * (p - 1.0) / (p + 1.0);
    let r = evaluate(&gs.field, params)?;
    let pohozaev_residual = (r.kinetic - r.potential - c * r.lp1).abs() / (r.kinetic + r.potential + c * r.lp1);
    let (ew1, sni, ew2, er1) = if gs.omega > 0.0 {
        let rs = rescale_to_unit_frequency(gs, None)?;
        let g2 = params.gamma().powi(2);
        let w2 = params.omega_rot.powi(2);
        let vt = rs.scaled_potential();
        let lt = rs.scaled_ang_mom();
        let lp1 = rs.report.lp1;
        let lhs = -vt - 2.0 * lt;
        let sni_rhs = w2 / g2 * (c + 2.0 * g2 / (g2 - w2)) * lp1;
        let er1_rhs = w2 / g2 * rs.report.kinetic;
        (
            Some(rs.ew1_residual),
            Some(sni_rhs - lhs),
            Some(2.0 * g2 / (g2 - w2) * lp1 - vt),
            Some(er1_rhs - lhs),
        )
    } else {
        (None, None, None, None)
    };
    let slack_ok = |s: Option<f64>| s.map_or(true, |v| v >= -CERT_SLACK_TOL);
    let passed = pohozaev_residual < CERT_RESIDUAL_TOL
        && ew1.map_or(true, |v| v < CERT_RESIDUAL_TOL)
        && slack_ok(sni)
        && slack_ok(ew2)
        && slack_ok(er1);
    Ok(CertificationReport {
        pohozaev_residual,
        stationary_residual: gs.residual,
        nehari_residual: gs.nehari_residual,
        ew1_residual: ew1,
        sni_slack: sni,
        ew2_slack: ew2,
        er1_slack: er1,
        passed,
    })
}

/// `4 int V |phi|^2 - N (p-1)/(p+1) (N(p-1)/2 - 2) lp1`; negative flags instability.
pub fn instability_indicator(gs: &GroundState) -> Result<f64> {
    indicator_of(&gs.field, &gs.params)
}

pub fn indicator_of(field: &ComplexField, params: &PhysicsParams) -> Result<f64> {
    params.require_supercritical()?;
    let r = evaluate(field, params)?;
    let n = params.dim as f64;
    let p = params.p;
    Ok(4.0 * r.potential - n * (p - 1.0) / (p + 1.0) * (n * (p - 1.0) / 2.0 - 2.0) * r.lp1)
}

/// Threshold on `int V |phi|^2 / lp1` below which the indicator is negative.
pub fn indicator_threshold(params: &PhysicsParams) -> f64 {
    let a = params.dim as f64 * (params.p - 1.0);
    a * (a - 4.0) / (8.0 * (params.p + 1.0))
}

/// `s^{N/2} f(s x)` sampled on the grid of `f` by trigonometric interpolation.
pub fn dilate(f: &ComplexField, s: f64) -> Result<ComplexField> {
    let d = f.grid().dim();
    let (g, _) = spectral::resample_stretched(f, f.grid(), &vec![s; d])?;
    Ok(g.scaled(s.powf(d as f64 / 2.0)))
}

/// Central second difference of `s -> E(s^{N/2} f(s .))` at `s = 1`.
pub fn scaling_second_derivative_fd(f: &ComplexField, params: &PhysicsParams, h: f64) -> Result<f64> {
    let e = |s: f64| -> Result<f64> { Ok(evaluate(&dilate(f, s)?, params)?.energy) };
    Ok((e(1.0 + h)? - 2.0 * e(1.0)? + e(1.0 - h)?) / (h * h))
}

/// Fraction of mass carried by angular modes `m != 0` on polar rings up to `r_max`.
pub fn nonradial_fraction(f: &ComplexField, r_max: f64, rings: usize, angles: usize) -> f64 {
    let dr = r_max / rings as f64;
    let mut points = Vec::with_capacity(rings * angles);
    for k in 0..rings {
        let r = (k as f64 + 0.5) * dr;
        for j in 0..angles {
            let th = 2.0 * std::f64::consts::PI * j as f64 / angles as f64;
            points.push([r * th.cos(), r * th.sin(), 0.0]);
        }
    }
    let vals = spectral::evaluate_at(f, &points);
    let mut total = 0.0;
    let mut radial = 0.0;
    for k in 0..rings {
        let r = (k as f64 + 0.5) * dr;
        let ring = &vals[k * angles..(k + 1) * angles];
        let mean: Complex64 = ring.iter().sum::<Complex64>() / angles as f64;
        let all: f64 = ring.iter().map(|z| z.norm_sqr()).sum::<f64>() / angles as f64;
        total += r * all;
        radial += r * mean.norm_sqr();
    }
    if total == 0.0 {
        0.0
    } else {
        ((total - radial) / total).max(0.0)
    }
}
