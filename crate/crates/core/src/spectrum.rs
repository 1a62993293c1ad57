//! Lowest eigenpair of `R = -Lap + V + 2 L_Omega`.
//!
//! Preconditioned gradient flow on the Rayleigh quotient with a three-term
//! Rayleigh-Ritz step (current iterate, preconditioned residual, previous search
//! direction). Each step minimizes over a subspace containing the current iterate, so
//! the quotient is non-increasing.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField, RealField};
use crate::functionals::{apply_quadratic_operator, potential_field};
use crate::grid::Grid;
use crate::params::PhysicsParams;
use crate::spectral;

pub const MAX_ITERATIONS: usize = 5000;

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub mu0: f64,
    pub lambda0: f64,
    pub eigenfield: ComplexField,
    pub residual: f64,
    pub iterations: usize,
    /// Rayleigh quotient after each iteration.
    pub history: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenSummary {
    pub mu0: f64,
    pub lambda0: f64,
    pub residual: f64,
    pub iterations: usize,
}

impl EigenResult {
    pub fn summary(&self) -> EigenSummary {
        EigenSummary { mu0: self.mu0, lambda0: self.lambda0, residual: self.residual, iterations: self.iterations }
    }
}

/// Normalized anisotropic Gaussian `exp(-sum gamma_j x_j^2 / 2)`.
pub fn oscillator_gaussian(grid: &Grid, params: &PhysicsParams) -> ComplexField {
    let g = params.gammas.clone();
    let mut f = ComplexField::from_fn(grid, |x| {
        Complex64::new((-0.5 * g.iter().zip(x).map(|(gj, xj)| gj * xj * xj).sum::<f64>()).exp(), 0.0)
    });
    let m = f.mass();
    f.scale(1.0 / m.sqrt());
    f
}

pub fn lowest_eigenpair(grid: &Grid, params: &PhysicsParams, tol: f64) -> Result<EigenResult> {
    lowest_eigenpair_from(&oscillator_gaussian(grid, params), params, tol)
}

fn rayleigh(op: &ComplexField, u: &ComplexField) -> f64 {
    op.inner(u).re / u.mass()
}

pub fn lowest_eigenpair_from(initial: &ComplexField, params: &PhysicsParams, tol: f64) -> Result<EigenResult> {
    params.validate()?;
    params.require_slow_rotation()?;
    let grid = initial.grid().clone();
    if grid.dim() != params.dim {
        return Err(Error::DimensionMismatch { expected: params.dim, got: grid.dim() });
    }
    initial.check_finite()?;
    if initial.mass() == 0.0 {
        return Err(Error::Degenerate("zero initial guess".into()));
    }
    let v = potential_field(&grid, params)?;
    let apply = |u: &ComplexField| apply_quadratic_operator(u, params, &v);

    let mut x = initial.scaled(1.0 / initial.mass().sqrt());
    let mut ax = apply(&x)?;
    let mut mu = rayleigh(&ax, &x);
    let mut direction: Option<ComplexField> = None;
    let mut history = vec![mu];
    let mut residual = f64::INFINITY;

    for it in 1..=MAX_ITERATIONS {
        let r = ax.lincomb(1.0, -mu, &x);
        residual = r.mass().sqrt();
        let prev = history.len().checked_sub(2).map(|i| history[i]);
        if residual < 10.0 * tol && prev.is_some_and(|m| (m - mu).abs() < tol) {
            return Ok(finish(x, mu, residual, it - 1, history));
        }
        let shift = mu.abs().max(1.0);
        let w = spectral::apply_multiplier(&r, |k2| 1.0 / (k2 + shift));

        let mut basis = vec![x.clone(), w];
        if let Some(d) = direction.take() {
            basis.push(d);
        }
        let basis = orthonormalize(basis);
        let images: Vec<ComplexField> = basis.iter().map(|b| apply(b)).collect::<Result<_>>()?;
        let k = basis.len();
        let a = DMatrix::from_fn(k, k, |i, j| images[j].inner(&basis[i]));
        // Symmetrize against roundoff before the Hermitian solve.
        let a = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = SymmetricEigen::new(a);
        let (imin, _) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, &e)| if e < acc.1 { (i, e) } else { acc });
        let c = eig.eigenvectors.column(imin);

        let combine = |fields: &[ComplexField], skip_first: bool| {
            let mut out = ComplexField::zeros(&grid);
            for (i, f) in fields.iter().enumerate() {
                if skip_first && i == 0 {
                    continue;
                }
                let ci = c[i];
                for (o, v) in out.values_mut().iter_mut().zip(f.values()) {
                    *o += ci * v;
                }
            }
            out
        };
        let new_x = combine(&basis, false);
        let new_ax = combine(&images, false);
        direction = Some(combine(&basis, true));
        let norm = new_x.mass().sqrt();
        x = new_x.scaled(1.0 / norm);
        ax = new_ax.scaled(1.0 / norm);
        mu = rayleigh(&ax, &x);
        history.push(mu);
        if it % 100 == 0 {
            log::debug!("eigen iteration {it}: mu = {mu:.15}, residual = {residual:.3e}");
        }
    }
    Err(Error::NonConvergence { solver: "lowest-eigenpair", iterations: MAX_ITERATIONS, residual })
}

fn finish(x: ComplexField, mu: f64, residual: f64, iterations: usize, history: Vec<f64>) -> EigenResult {
    EigenResult { mu0: mu, lambda0: -mu, eigenfield: x, residual, iterations, history }
}

/// Modified Gram-Schmidt in the `L^2` inner product, dropping near-dependent vectors.
fn orthonormalize(vectors: Vec<ComplexField>) -> Vec<ComplexField> {
    let mut out: Vec<ComplexField> = Vec::with_capacity(vectors.len());
    for mut v in vectors {
        let before = v.mass().sqrt();
        if before == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in &out {
                let proj = v.inner(q);
                for (a, b) in v.values_mut().iter_mut().zip(q.values()) {
                    *a -= proj * b;
                }
            }
        }
        let after = v.mass().sqrt();
        if after > 1e-10 * before {
            out.push(v.scaled(1.0 / after));
        }
    }
    out
}

/// Rayleigh quotient `t[u]/M(u)` of an arbitrary field.
pub fn rayleigh_quotient(u: &ComplexField, params: &PhysicsParams, potential: &RealField) -> Result<f64> {
    Ok(rayleigh(&apply_quadratic_operator(u, params, potential)?, u))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn isotropic_oscillator() {
        let g = make_grid(2, &[8.0, 8.0], &[64, 64]).unwrap();
        let params = PhysicsParams::new(2, 3.0, &[1.0, 1.0], 0.0).unwrap();
        let res = lowest_eigenpair(&g, &params, 1e-9).unwrap();
        assert!((res.mu0 - 2.0).abs() < 1e-6);
        assert!((res.eigenfield.mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_fast_rotation() {
        let g = make_grid(2, &[8.0, 8.0], &[32, 32]).unwrap();
        let params = PhysicsParams::new(2, 3.0, &[1.0, 1.0], 1.0).unwrap();
        assert!(lowest_eigenpair(&g, &params, 1e-8).is_err());
    }
}
