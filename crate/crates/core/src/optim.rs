//! Preconditioned nonlinear conjugate gradients on a constraint manifold.
//!
//! The line search takes a secant step on the directional derivative, which stays
//! accurate once functional differences drop to roundoff, and backtracks whenever the
//! functional increases.

use crate::error::{Error, Result};
use crate::field::ComplexField;

/// One evaluation of the objective at a point on the manifold.
#[derive(Debug, Clone)]
pub struct Eval {
    pub value: f64,
    /// Riemannian gradient in the real `L^2` metric (tangent at the point).
    pub grad: ComplexField,
    /// Scalar used for the stopping test.
    pub residual: f64,
    /// Scale against which `residual` is compared.
    pub scale: f64,
}

pub trait Problem {
    fn evaluate(&self, u: &ComplexField) -> Result<Eval>;
    /// Preconditioned gradient, projected onto the tangent space at `u`.
    fn precondition(&self, u: &ComplexField, grad: &ComplexField) -> ComplexField;
    /// Projection of a direction onto the tangent space at `u`.
    fn tangent(&self, u: &ComplexField, d: &ComplexField) -> ComplexField;
    /// Map `u + alpha d` back to the manifold; also returns the amplitude factor applied.
    fn retract(&self, u: &ComplexField, d: &ComplexField, alpha: f64) -> Result<(ComplexField, f64)>;
    /// Hook run on every accepted iterate.
    fn admit(&self, _u: &ComplexField, _eval: &Eval) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub tol: f64,
    pub max_iterations: usize,
    pub restart_every: usize,
    pub initial_step: f64,
}

impl Default for Options {
    fn default() -> Self {
        Self { tol: 1e-7, max_iterations: 20_000, restart_every: 100, initial_step: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub point: ComplexField,
    pub eval: Eval,
    pub iterations: usize,
    pub values: Vec<f64>,
}

fn re_inner(a: &ComplexField, b: &ComplexField) -> f64 {
    a.inner(b).re
}

pub fn minimize<P: Problem>(problem: &P, start: &ComplexField, opts: &Options, name: &'static str) -> Result<Outcome> {
    let (mut u, _) = problem.retract(start, &ComplexField::zeros(start.grid()), 0.0)?;
    let mut ev = problem.evaluate(&u)?;
    problem.admit(&u, &ev)?;
    let mut z = problem.precondition(&u, &ev.grad);
    let mut d = z.scaled(-1.0);
    let mut alpha = opts.initial_step;
    let mut values = vec![ev.value];
    let mut since_restart = 0usize;

    for it in 0..opts.max_iterations {
        if ev.residual <= opts.tol * ev.scale {
            return Ok(Outcome { point: u, eval: ev, iterations: it, values });
        }
        let slope0 = re_inner(&ev.grad, &d);
        if !(slope0 < 0.0) {
            d = z.scaled(-1.0);
            since_restart = 0;
            continue;
        }
        let increase_tol = 1e-13 * ev.value.abs().max(1e-300);

        // Trial step, backtracking on increase.
        let mut trial = None;
        for _ in 0..60 {
            let (ut, kappa) = problem.retract(&u, &d, alpha)?;
            let et = problem.evaluate(&ut)?;
            if et.value.is_finite() && et.value <= ev.value + increase_tol {
                trial = Some((ut, kappa, et));
                break;
            }
            alpha *= 0.25;
        }
        let Some((ut, kappa, et)) = trial else {
            return Err(Error::NonConvergence { solver: name, iterations: it, residual: ev.residual });
        };

        // Secant refinement on the directional derivative.
        let slope_t = kappa * re_inner(&et.grad, &d);
        let (mut u_new, mut e_new, mut step) = (ut, et, alpha);
        if slope_t > slope0 {
            let a_star = (alpha * slope0 / (slope0 - slope_t)).clamp(0.1 * alpha, 10.0 * alpha);
            if (a_star - alpha).abs() > 1e-3 * alpha {
                let (us, _) = problem.retract(&u, &d, a_star)?;
                let es = problem.evaluate(&us)?;
                if es.value.is_finite() && es.value <= e_new.value + increase_tol {
                    u_new = us;
                    e_new = es;
                    step = a_star;
                }
            }
        }
        alpha = step;

        problem.admit(&u_new, &e_new)?;
        let z_new = problem.precondition(&u_new, &e_new.grad);
        let denom = re_inner(&z, &ev.grad);
        let diff = e_new.grad.sub(&ev.grad);
        let mut beta = if denom > 0.0 { (re_inner(&z_new, &diff) / denom).max(0.0) } else { 0.0 };
        since_restart += 1;
        if since_restart >= opts.restart_every {
            beta = 0.0;
            since_restart = 0;
        }
        let d_new = problem.tangent(&u_new, &z_new.lincomb(-1.0, beta, &d));
        u = u_new;
        ev = e_new;
        z = z_new;
        d = d_new;
        values.push(ev.value);
        if it % 200 == 0 {
            log::debug!("{name} iteration {it}: value {:.15e}, residual {:.3e}, step {:.3e}", ev.value, ev.residual, alpha);
        }
    }
    Err(Error::NonConvergence { solver: name, iterations: opts.max_iterations, residual: ev.residual })
}
