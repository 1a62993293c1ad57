//! The free ground state `Q` of `-1/2 Lap Q + Q - Q^p = 0`, by radial shooting.

use std::f64::consts::{PI, SQRT_2};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::grid::Grid;
use crate::params::critical_index;

/// Default RK4 step for the shooting integration.
pub const DEFAULT_STEP: f64 = 1e-3;
/// The shooting solution is trusted down to this fraction of `Q(0)`; beyond it the
/// asymptotic tail takes over.
const MATCH_LEVEL: f64 = 1e-6;
/// Samples extend until the tail falls below this fraction of `Q(0)`.
const CUTOFF_LEVEL: f64 = 1e-12;
/// Samples are stored every `STORE_EVERY` integration steps.
const STORE_EVERY: usize = 10;
const MAX_BISECTIONS: usize = 200;

/// Certified radial profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QProfile {
    pub dim: usize,
    pub p: f64,
    pub tol: f64,
    pub step: f64,
    /// `Q(0)` found by shooting.
    pub center: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub slopes: Vec<f64>,
    /// Tail `Q(r) = tail_coeff * r^{-(N-1)/2} e^{-sqrt(2) r}` for `r >= match_radius`.
    pub tail_coeff: f64,
    pub match_radius: f64,
    pub r_max: f64,
    pub mass: f64,
    pub grad: f64,
    pub lp1: f64,
    pub e00: f64,
    pub c_gn: f64,
    pub pohozaev_residuals: [f64; 2],
}

fn sphere_area(dim: usize) -> f64 {
    match dim {
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!("dimension checked"),
    }
}

/// `kappa = 2N(p-1) / (2(p+1) - N(p-1))`, so that `||grad Q||^2 = kappa ||Q||^2`.
pub fn pohozaev_kappa(dim: usize, p: f64) -> f64 {
    let n = dim as f64;
    2.0 * n * (p - 1.0) / (2.0 * (p + 1.0) - n * (p - 1.0))
}

#[derive(Clone, Copy)]
enum Shot {
    Overshoot,
    Undershoot,
}

struct Integration {
    radii: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
    /// `int_0^r s^{N-1} (Q^2, Q'^2, Q^{p+1}) ds` at the last radius reached.
    moments: [f64; 3],
    outcome: Option<Shot>,
}

/// State `(Q, Q', m, g, l)`; the last three accumulate the radial moments so that the
/// norms inherit the integrator's order.
fn rhs(dim: usize, p: f64, r: f64, y: [f64; 5]) -> [f64; 5] {
    let q = y[0];
    let w = r.powi(dim as i32 - 1);
    let qp = q.abs().powf(p - 1.0) * q;
    [y[1], -(dim as f64 - 1.0) / r * y[1] + 2.0 * q - 2.0 * qp, w * q * q, w * y[1] * y[1], w * qp * q]
}

fn axpy5(y: [f64; 5], a: f64, k: [f64; 5]) -> [f64; 5] {
    let mut out = y;
    for i in 0..5 {
        out[i] += a * k[i];
    }
    out
}

/// Integrates from the origin until the orbit overshoots, undershoots, or drops below
/// `stop_level * a`.
fn shoot(dim: usize, p: f64, a: f64, h: f64, stop_level: f64, r_limit: f64) -> Integration {
    let n = dim as f64;
    let q2 = 2.0 * (a - a.powf(p)) / n;
    let mut r = h;
    // Leading-order series for the state at r = h.
    let hn = h.powi(dim as i32) / n;
    let mut y = [a + 0.5 * q2 * h * h, q2 * h, a * a * hn, 0.0, a.powf(p + 1.0) * hn];
    let mut out = Integration {
        radii: vec![0.0],
        values: vec![a],
        slopes: vec![0.0],
        moments: [0.0; 3],
        outcome: None,
    };
    let mut k = 1usize;
    while r < r_limit {
        if k % STORE_EVERY == 0 {
            out.radii.push(r);
            out.values.push(y[0]);
            out.slopes.push(y[1]);
            out.moments = [y[2], y[3], y[4]];
        }
        if y[0] <= 0.0 {
            out.outcome = Some(Shot::Overshoot);
            return out;
        }
        if y[1] > 0.0 {
            out.outcome = Some(Shot::Undershoot);
            return out;
        }
        if y[0] < stop_level * a && k % STORE_EVERY == 0 {
            return out;
        }
        let k1 = rhs(dim, p, r, y);
        let k2 = rhs(dim, p, r + h / 2.0, axpy5(y, h / 2.0, k1));
        let k3 = rhs(dim, p, r + h / 2.0, axpy5(y, h / 2.0, k2));
        let k4 = rhs(dim, p, r + h, axpy5(y, h, k3));
        for i in 0..5 {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        r = (k + 1) as f64 * h;
        k += 1;
    }
    out
}

pub fn solve_q(dim: usize, p: f64, tol: f64) -> Result<QProfile> {
    solve_q_with_step(dim, p, tol, DEFAULT_STEP)
}

pub fn solve_q_with_step(dim: usize, p: f64, tol: f64, step: f64) -> Result<QProfile> {
    if !(dim == 2 || dim == 3) {
        return Err(Error::InvalidParams(format!("dimension must be 2 or 3, got {dim}")));
    }
    let n = dim as f64;
    let p_crit = 1.0 + 4.0 / n;
    let p_max = if dim == 2 { f64::INFINITY } else { 5.0 };
    if !(p >= p_crit - 1e-14 && p < p_max) {
        return Err(Error::InvalidParams(format!("p = {p} outside [{p_crit}, {p_max})")));
    }
    if !(tol > 0.0 && step > 0.0) {
        return Err(Error::InvalidParams("tolerance and step must be positive".into()));
    }
    let r_limit = 60.0;

    // Bracket Q(0): a = 1 is the constant equilibrium and undershoots.
    let mut lo = 1.0 + 1e-9;
    let mut hi = 2.0;
    let mut grow = 0;
    while !matches!(shoot(dim, p, hi, step, MATCH_LEVEL, r_limit).outcome, Some(Shot::Overshoot)) {
        lo = hi;
        hi *= 2.0;
        grow += 1;
        if grow > 40 {
            return Err(Error::NonConvergence { solver: "q-shooting bracket", iterations: grow, residual: hi });
        }
    }
    let mut iters = 0;
    while hi - lo > 4.0 * f64::EPSILON * hi {
        let mid = 0.5 * (lo + hi);
        match shoot(dim, p, mid, step, 0.0, r_limit).outcome {
            Some(Shot::Overshoot) => hi = mid,
            Some(Shot::Undershoot) => lo = mid,
            None => break,
        }
        iters += 1;
        if iters >= MAX_BISECTIONS {
            return Err(Error::NonConvergence { solver: "q-shooting", iterations: iters, residual: hi - lo });
        }
    }
    let integration = shoot(dim, p, 0.5 * (lo + hi), step, MATCH_LEVEL, r_limit);
    if integration.outcome.is_some() {
        return Err(Error::NonConvergence {
            solver: "q-shooting",
            iterations: iters,
            residual: hi - lo,
        });
    }
    let center = integration.values[0];
    let mut radii = integration.radii;
    let mut values = integration.values;
    let mut slopes = integration.slopes;

    // Fit the tail at the last trusted sample.
    let nu = (n - 1.0) / 2.0;
    let r_m = *radii.last().expect("samples");
    let q_m = *values.last().expect("samples");
    let tail_coeff = q_m * r_m.powf(nu) * (SQRT_2 * r_m).exp();
    let tail = |r: f64| tail_coeff * r.powf(-nu) * (-SQRT_2 * r).exp();
    let tail_slope = |r: f64| -tail(r) * (SQRT_2 + nu / r);
    let hs = step * STORE_EVERY as f64;
    let mut r = r_m;
    while tail(r) >= CUTOFF_LEVEL * center {
        r += hs;
        radii.push(r);
        values.push(tail(r));
        slopes.push(tail_slope(r));
    }
    let r_max = r;

    // Moments accumulated by the integrator up to r_m, plus the fitted tail beyond it.
    let area = sphere_area(dim);
    let tail_mass = tail_coeff * tail_coeff * (-2.0 * SQRT_2 * r_m).exp() / (2.0 * SQRT_2);
    let [m_in, g_in, l_in] = integration.moments;
    let mass = area * (m_in + tail_mass);
    let grad = area * (g_in + 2.0 * tail_mass);
    let lp1 = area * l_in;

    let s_c = critical_index(dim, p);
    let kappa = pohozaev_kappa(dim, p);
    let e00 = 0.5 * grad - 2.0 / (p + 1.0) * lp1;
    let c_gn = kappa.powf((4.0 - n * (p - 1.0)) / 4.0) * (p + 1.0) / (n * (p - 1.0) * mass.powf((p - 1.0) / 2.0));
    // Pohozaev relations: ||grad Q||^2 = kappa ||Q||^2 and E00 = (s_c/N) kappa ||Q||^2.
    let res_grad = (grad / (kappa * mass) - 1.0).abs();
    let res_e00 = if s_c > 0.0 { (e00 / (s_c / n * kappa * mass) - 1.0).abs() } else { (e00 / grad).abs() };

    let profile = QProfile {
        dim,
        p,
        tol,
        step,
        center,
        radii,
        values,
        slopes,
        tail_coeff,
        match_radius: r_m,
        r_max,
        mass,
        grad,
        lp1,
        e00,
        c_gn,
        pohozaev_residuals: [res_grad, res_e00],
    };
    log::info!(
        "Q(N={dim}, p={p}): Q(0) = {center:.15}, |Q|^2 = {mass:.12}, Pohozaev residuals {:.2e} / {:.2e}",
        res_grad,
        res_e00
    );
    Ok(profile)
}

impl QProfile {
    pub fn s_c(&self) -> f64 {
        critical_index(self.dim, self.p)
    }

    /// Certification threshold actually enforced: the requested tolerance, floored at
    /// what the fixed-step integrator can deliver.
    pub fn certification_tol(&self) -> f64 {
        self.tol.max(1e-9)
    }

    pub fn certify(&self) -> Result<()> {
        let worst = self.pohozaev_residuals[0].max(self.pohozaev_residuals[1]);
        if worst > self.certification_tol() {
            return Err(Error::NonConvergence { solver: "q-certification", iterations: 0, residual: worst });
        }
        let decreasing = self.values.windows(2).all(|w| w[1] < w[0]);
        if !decreasing || self.values.iter().any(|&v| v <= 0.0) {
            return Err(Error::Degenerate("profile is not positive and decreasing".into()));
        }
        if *self.values.last().expect("samples") >= 1e-10 * self.center {
            return Err(Error::Degenerate("profile does not decay within r_max".into()));
        }
        Ok(())
    }

    /// `Q(r)` by cubic Hermite interpolation; zero beyond `r_max`.
    pub fn value_at(&self, r: f64) -> f64 {
        let r = r.abs();
        if r >= self.r_max {
            return 0.0;
        }
        // Samples are uniform after the origin.
        let hs = self.radii[1] - self.radii[0];
        let i = ((r / hs) as usize).min(self.radii.len() - 2);
        let (r0, r1) = (self.radii[i], self.radii[i + 1]);
        let h = r1 - r0;
        let s = (r - r0) / h;
        let (y0, y1, m0, m1) = (self.values[i], self.values[i + 1], self.slopes[i] * h, self.slopes[i + 1] * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * m0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * m1
    }

    /// Sample `Q(|x|)` on a grid.
    pub fn to_field(&self, grid: &Grid) -> Result<ComplexField> {
        if grid.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: grid.dim() });
        }
        let d = self.dim;
        Ok(ComplexField::from_fn(grid, |x| {
            let r = x[..d].iter().map(|v| v * v).sum::<f64>().sqrt();
            Complex64::new(self.value_at(r), 0.0)
        }))
    }

    /// `lp1 / (grad^{a/2} mass^{(p+1-a)/2})` from the radial norms.
    pub fn radial_gn_ratio(&self) -> f64 {
        let a = self.dim as f64 * (self.p - 1.0) / 2.0;
        self.lp1 / (self.grad.powf(a / 2.0) * self.mass.powf((self.p + 1.0 - a) / 2.0))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Closed-form sharp GN constant, cross-checked against the radial quotient.
pub fn gn_constant(q: &QProfile) -> Result<f64> {
    q.certify()?;
    let ratio = q.radial_gn_ratio();
    if (ratio / q.c_gn - 1.0).abs() > 1e-6 {
        return Err(Error::NonConvergence { solver: "gn-constant cross-check", iterations: 0, residual: ratio / q.c_gn - 1.0 });
    }
    Ok(q.c_gn)
}

/// Threshold quantities of the blow-up / global existence dichotomy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub s_c: f64,
    /// Local maximizer of `f(x) = x^2/2 - beta x^{N(p-1)/2}` for the given datum mass.
    pub x1: f64,
    pub x_max: f64,
    pub x_r: f64,
    pub me_threshold: f64,
    pub grad_threshold: f64,
}

pub fn thresholds(q: &QProfile, u0_mass: f64) -> Result<Thresholds> {
    let s_c = q.s_c();
    if !(s_c > 0.0 && s_c < 1.0) {
        return Err(Error::Regime(format!("s_c = {s_c} outside (0, 1)")));
    }
    if !(u0_mass > 0.0) {
        return Err(Error::Degenerate("datum mass must be positive".into()));
    }
    let n = q.dim as f64;
    let p = q.p;
    let q_norm = q.mass.sqrt();
    let grad_norm = q.grad.sqrt();
    let x_max = grad_norm * q_norm.powf((1.0 - s_c) / s_c);
    let x_r = ((p - 1.0) * n / 4.0).powf(1.0 / (s_c * (p - 1.0))) * x_max;
    let x1 = ((p + 1.0) / (n * (p - 1.0) * q.c_gn)).powf(1.0 / (s_c * (p - 1.0)))
        * u0_mass.powf(-(1.0 - s_c) / (2.0 * s_c));
    Ok(Thresholds {
        s_c,
        x1,
        x_max,
        x_r,
        me_threshold: q.e00.powf(s_c) * q.mass.powf(1.0 - s_c),
        grad_threshold: grad_norm.powf(s_c) * q_norm.powf(1.0 - s_c),
    })
}

/// `f(x) = x^2/2 - beta x^{N(p-1)/2}` with `beta = 2 c_GN/(p+1) ||u0||^{p+1-N(p-1)/2}`.
pub fn gn_energy_bound(q: &QProfile, u0_mass: f64, x: f64) -> f64 {
    let a = q.dim as f64 * (q.p - 1.0) / 2.0;
    let beta = 2.0 * q.c_gn / (q.p + 1.0) * u0_mass.sqrt().powf(q.p + 1.0 - a);
    0.5 * x * x - beta * x.powf(a)
}

/// `h(x) = x^2/2 - 2 c_GN/(p+1) x^{N(p-1)/2}`, the unit-mass case of [`gn_energy_bound`].
pub fn gn_energy_bound_unit(q: &QProfile, x: f64) -> f64 {
    let a = q.dim as f64 * (q.p - 1.0) / 2.0;
    0.5 * x * x - 2.0 * q.c_gn / (q.p + 1.0) * x.powf(a)
}

fn cache_path(dir: &Path, dim: usize, p: f64, tol: f64) -> PathBuf {
    dir.join(format!("q_N{dim}_p{p}_tol{tol:e}.json"))
}

/// Load a cached profile keyed by `(N, p, tol)` or solve and store it. The flag reports a cache hit.
pub fn load_or_solve(dir: &Path, dim: usize, p: f64, tol: f64) -> Result<(QProfile, bool)> {
    let path = cache_path(dir, dim, p, tol);
    if let Ok(text) = std::fs::read_to_string(&path) {
        match QProfile::from_json(&text) {
            Ok(q) if q.dim == dim && q.p == p && q.tol == tol => {
                log::info!("Q cache hit: {}", path.display());
                return Ok((q, true));
            }
            _ => log::warn!("ignoring unreadable Q cache entry {}", path.display()),
        }
    }
    let q = solve_q(dim, p, tol)?;
    q.certify()?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(&path, q.to_json()?)?;
    log::info!("Q cache store: {}", path.display());
    Ok((q, false))
}
