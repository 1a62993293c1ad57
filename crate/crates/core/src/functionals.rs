//! Mass, energy, quadratic form, angular momentum and the stationary functionals.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ComplexField, RealField};
use crate::grid::Grid;
use crate::params::PhysicsParams;
use crate::spectral::{self, integrate_with};

/// Relative size of `Im <L u, u>` tolerated before a warning is logged.
pub const ANG_MOM_IMAG_TOL: f64 = 1e-10;

/// Column order of [`FunctionalReport::csv_row`].
pub const CSV_HEADER: [&str; 9] =
    ["t", "M", "kinetic", "potential", "lp1", "ang_mom", "quad_form", "energy", "sigma_norm2"];

fn check_dims(grid: &Grid, params: &PhysicsParams) -> Result<()> {
    if grid.dim() != params.dim {
        return Err(Error::DimensionMismatch { expected: params.dim, got: grid.dim() });
    }
    Ok(())
}

/// `V(x) = sum_j gamma_j^2 x_j^2`.
pub fn potential_field(grid: &Grid, params: &PhysicsParams) -> Result<RealField> {
    check_dims(grid, params)?;
    let g2: Vec<f64> = params.gammas.iter().map(|g| g * g).collect();
    Ok(RealField::from_fn(grid, |x| g2.iter().zip(x).map(|(g, xi)| g * xi * xi).sum()))
}

/// `|x|^2` on the grid.
pub fn radius_squared_field(grid: &Grid) -> RealField {
    let d = grid.dim();
    RealField::from_fn(grid, |x| x[..d].iter().map(|v| v * v).sum())
}

/// `L_Omega f = s * (-i |Omega|) (x1 d2 f - x2 d1 f)`.
pub fn apply_angular_momentum(f: &ComplexField, params: &PhysicsParams) -> Result<ComplexField> {
    check_dims(f.grid(), params)?;
    let c = params.rotation_coefficient();
    if c == 0.0 {
        return Ok(ComplexField::zeros(f.grid()));
    }
    let grid = f.grid();
    let d1 = spectral::derivative(f, 0);
    let d2 = spectral::derivative(f, 1);
    let factor = Complex64::new(0.0, -c);
    let values = (0..grid.len())
        .map(|i| {
            let x = grid.position(i);
            factor * (d2.values()[i] * x[0] - d1.values()[i] * x[1])
        })
        .collect();
    ComplexField::new(grid, values)
}

/// `<L_Omega f, f>` as a complex number; its imaginary part is a discretization residue.
pub fn angular_momentum_complex(f: &ComplexField, params: &PhysicsParams) -> Result<Complex64> {
    Ok(apply_angular_momentum(f, params)?.inner(f))
}

/// All scalar functionals of one field.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub mass: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub lp1: f64,
    pub ang_mom: f64,
    pub ang_mom_imag: f64,
    pub quad_form: f64,
    pub energy: f64,
    pub second_moment: f64,
    pub sigma_norm2: f64,
    /// `||u||_H^2`, reported as the raw quadratic form.
    pub h_norm2: f64,
}

impl FunctionalReport {
    pub fn csv_header() -> String {
        CSV_HEADER.join(",")
    }

    /// One CSV row in the order of [`CSV_HEADER`].
    pub fn csv_row(&self, t: f64) -> String {
        [
            t,
            self.mass,
            self.kinetic,
            self.potential,
            self.lp1,
            self.ang_mom,
            self.quad_form,
            self.energy,
            self.sigma_norm2,
        ]
        .iter()
        .map(|v| format!("{v:.17e}"))
        .collect::<Vec<_>>()
        .join(",")
    }

    /// Inverse of [`csv_row`](Self::csv_row); returns `(t, report)`. Fields not carried
    /// by the row are zero, except `h_norm2` which equals the quadratic form.
    pub fn parse_csv_row(row: &str) -> Result<(f64, Self)> {
        let vals: Vec<f64> = row
            .trim()
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("bad CSV number: {e}")))?;
        if vals.len() != CSV_HEADER.len() {
            return Err(Error::Format(format!("expected {} columns, got {}", CSV_HEADER.len(), vals.len())));
        }
        Ok((
            vals[0],
            Self {
                mass: vals[1],
                kinetic: vals[2],
                potential: vals[3],
                lp1: vals[4],
                ang_mom: vals[5],
                quad_form: vals[6],
                energy: vals[7],
                sigma_norm2: vals[8],
                h_norm2: vals[6],
                ..Default::default()
            },
        ))
    }
}

/// `E = 1/2 t[u] - 2/(p+1) ||u||_{p+1}^{p+1}`.
pub fn energy_from_parts(quad_form: f64, lp1: f64, p: f64) -> f64 {
    0.5 * quad_form - 2.0 / (p + 1.0) * lp1
}

pub fn evaluate(f: &ComplexField, params: &PhysicsParams) -> Result<FunctionalReport> {
    check_dims(f.grid(), params)?;
    f.check_finite()?;
    let grid = f.grid();
    let g2: Vec<f64> = params.gammas.iter().map(|g| g * g).collect();
    let d = grid.dim();
    let vals = f.values();

    let mass = f.mass();
    let kinetic = spectral::kinetic(f);
    let potential = integrate_with(grid, |i| {
        let x = grid.position(i);
        g2.iter().zip(x).map(|(g, xi)| g * xi * xi).sum::<f64>() * vals[i].norm_sqr()
    });
    let second_moment = integrate_with(grid, |i| {
        let x = grid.position(i);
        x[..d].iter().map(|v| v * v).sum::<f64>() * vals[i].norm_sqr()
    });
    let lp1 = f.lp_norm_pow(params.p + 1.0);
    let l = angular_momentum_complex(f, params)?;
    if l.im.abs() > ANG_MOM_IMAG_TOL * mass.max(f64::MIN_POSITIVE) {
        log::warn!("angular momentum has imaginary residue {:.3e} (mass {:.3e})", l.im, mass);
    }
    let quad_form = kinetic + potential + 2.0 * l.re;
    Ok(FunctionalReport {
        mass,
        kinetic,
        potential,
        lp1,
        ang_mom: l.re,
        ang_mom_imag: l.im,
        quad_form,
        energy: energy_from_parts(quad_form, lp1, params.p),
        second_moment,
        sigma_norm2: kinetic + second_moment + mass,
        h_norm2: quad_form,
    })
}

/// Action `S`, Nehari functional `I` and Pohozaev functional `P` at frequency `omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryFunctionals {
    pub action: f64,
    pub nehari: f64,
    pub pohozaev: f64,
}

impl StationaryFunctionals {
    pub fn from_report(r: &FunctionalReport, params: &PhysicsParams, omega: f64) -> Self {
        let p = params.p;
        let n = params.dim as f64;
        Self {
            action: 0.5 * r.quad_form + 0.5 * omega * r.mass - 2.0 / (p + 1.0) * r.lp1,
            nehari: r.quad_form + omega * r.mass - 2.0 * r.lp1,
            pohozaev: 0.5 * r.kinetic - 0.5 * r.potential - n * (p - 1.0) / (2.0 * (p + 1.0)) * r.lp1,
        }
    }
}

pub fn stationary_functionals(f: &ComplexField, params: &PhysicsParams, omega: f64) -> Result<StationaryFunctionals> {
    Ok(StationaryFunctionals::from_report(&evaluate(f, params)?, params, omega))
}

/// Gagliardo-Nirenberg quotient `||f||_{p+1}^{p+1} / (||grad f||^{N(p-1)/2} ||f||^{p+1-N(p-1)/2})`.
pub fn gn_ratio(f: &ComplexField, params: &PhysicsParams) -> Result<f64> {
    check_dims(f.grid(), params)?;
    let mass = f.mass();
    let kinetic = spectral::kinetic(f);
    if mass == 0.0 || kinetic == 0.0 {
        return Err(Error::Degenerate("GN ratio of a zero or constant field".into()));
    }
    let a = params.gn_gradient_power();
    let lp1 = f.lp_norm_pow(params.p + 1.0);
    Ok(lp1 / (kinetic.powf(a / 2.0) * mass.powf((params.p + 1.0 - a) / 2.0)))
}

/// Slack in `|l(f)| <= |Omega|^2/(2a) ||x f||^2 + a/2 ||grad f||^2`.
pub fn emii_bound_check(f: &ComplexField, params: &PhysicsParams, a: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::InvalidParams(format!("a must be positive, got {a}")));
    }
    let r = evaluate(f, params)?;
    let w = params.omega_rot;
    Ok(w * w / (2.0 * a) * r.second_moment + a / 2.0 * r.kinetic - r.ang_mom.abs())
}

/// `sum_j ||d_j f||^2 + ||x f||^2 + ||f||^2` computed from scratch.
pub fn sigma_norm2(f: &ComplexField) -> f64 {
    let grid = f.grid();
    let d = grid.dim();
    let vals = f.values();
    let moment = integrate_with(grid, |i| {
        let x = grid.position(i);
        x[..d].iter().map(|v| v * v).sum::<f64>() * vals[i].norm_sqr()
    });
    spectral::kinetic(f) + moment + f.mass()
}

/// Apply the stationary operator `-Lap u + omega u + V u - 2|u|^{p-1} u + 2 L u`.
pub fn stationary_operator(f: &ComplexField, params: &PhysicsParams, omega: f64, potential: &RealField) -> Result<ComplexField> {
    let lap = spectral::laplacian(f);
    let lu = apply_angular_momentum(f, params)?;
    let p = params.p;
    let values = f
        .values()
        .iter()
        .zip(lap.values())
        .zip(lu.values())
        .zip(potential.values())
        .map(|(((u, l), a), v)| -l + u * (omega + v - 2.0 * u.norm().powf(p - 1.0)) + a * 2.0)
        .collect();
    ComplexField::new(f.grid(), values)
}

/// Apply the linear part `-Lap u + V u + 2 L u` whose quadratic form is `t[u]`.
pub fn apply_quadratic_operator(f: &ComplexField, params: &PhysicsParams, potential: &RealField) -> Result<ComplexField> {
    let lap = spectral::laplacian(f);
    let lu = apply_angular_momentum(f, params)?;
    let values = f
        .values()
        .iter()
        .zip(lap.values())
        .zip(lu.values())
        .zip(potential.values())
        .map(|(((u, l), a), v)| -l + u * v + a * 2.0)
        .collect();
    ComplexField::new(f.grid(), values)
}

/// `e^{i theta} u` with `theta` minimizing `||e^{i theta} u - reference||_2`.
pub fn align_phase(u: &ComplexField, reference: &ComplexField) -> ComplexField {
    let c = reference.inner(u);
    if c.norm() == 0.0 {
        return u.clone();
    }
    let mut out = u.clone();
    out.scale_complex(c / c.norm());
    out
}

/// `inf_theta ||e^{i theta} u - reference||_Sigma`, evaluated at the `L^2`-optimal phase.
pub fn sigma_distance(u: &ComplexField, reference: &ComplexField) -> f64 {
    sigma_norm2(&align_phase(u, reference).sub(reference)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        make_grid(2, &[8.0, 8.0], &[64, 64]).unwrap()
    }

    fn gaussian(g: &Grid) -> ComplexField {
        ComplexField::from_fn(g, |x| Complex64::new(PI.powf(-0.5) * (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp(), 0.0))
    }

    fn vortex(g: &Grid) -> ComplexField {
        ComplexField::from_fn(g, |x| {
            Complex64::new(x[0], x[1]) * (PI.powf(-0.5) * (-(x[0] * x[0] + x[1] * x[1]) / 2.0).exp())
        })
    }

    #[test]
    fn potential_samples() {
        let g = make_grid(2, &[4.0, 4.0], &[8, 8]).unwrap();
        // x = (1, 2) sits at indices (5, 6) with h = 1.
        let flat = 5 * 8 + 6;
        assert_eq!(g.position(flat)[..2], [1.0, 2.0]);
        let v = potential_field(&g, &PhysicsParams::new(2, 3.0, &[1.0, 1.0], 0.0).unwrap()).unwrap();
        assert_eq!(v.values()[flat], 5.0);
        let v = potential_field(&g, &PhysicsParams::new(2, 3.0, &[1.0, 2.0], 0.0).unwrap()).unwrap();
        assert_eq!(v.values()[5 * 8 + 5], 5.0);
        let g3 = make_grid(3, &[4.0; 3], &[8; 3]).unwrap();
        let v = potential_field(&g3, &PhysicsParams::new(3, 2.0, &[1.0; 3], 0.0).unwrap()).unwrap();
        assert_eq!(v.values()[5 * 64 + 5 * 8 + 5], 3.0);
        assert!(potential_field(&g3, &PhysicsParams::new(2, 3.0, &[1.0; 2], 0.0).unwrap()).is_err());
    }

    #[test]
    fn gaussian_report() {
        let g = grid();
        let params = PhysicsParams::new(2, 3.0, &[1.0, 1.0], 0.0).unwrap();
        let r = evaluate(&gaussian(&g), &params).unwrap();
        assert!((r.mass - 1.0).abs() < 1e-12);
        assert!((r.kinetic - 1.0).abs() < 1e-10);
        assert!((r.potential - 1.0).abs() < 1e-10);
        assert!((r.lp1 - 1.0 / (2.0 * PI)).abs() < 1e-12);
        assert!((r.quad_form - 2.0).abs() < 1e-10);
        assert!((r.energy - (1.0 - 1.0 / (4.0 * PI))).abs() < 1e-10);
        let s = StationaryFunctionals::from_report(&r, &params, 1.0);
        assert!((s.action - (1.0 + 0.5 - 0.25 / PI)).abs() < 1e-10);
        assert!((s.nehari - (3.0 - 1.0 / PI)).abs() < 1e-10);
        // N(p-1)/(2(p+1)) = 1/2 at (N, p) = (2, 3).
        assert!((s.pohozaev + 1.0 / (4.0 * PI)).abs() < 1e-10);
    }

    #[test]
    fn vortex_angular_momentum() {
        let g = grid();
        let params = PhysicsParams::new(2, 3.0, &[1.0, 1.0], 0.3).unwrap().with_sign(-1.0).unwrap();
        let v = vortex(&g);
        let r = evaluate(&v, &params).unwrap();
        assert!((r.mass - 1.0).abs() < 1e-12);
        assert!((r.ang_mom + 0.3).abs() < 1e-10);
        assert!((r.quad_form - (r.kinetic + r.potential - 0.6)).abs() < 1e-12);
        assert!(emii_bound_check(&v, &params, 1.0).unwrap() >= 0.0);
        let flipped = evaluate(&v, &params.clone().with_sign(1.0).unwrap()).unwrap();
        assert!((flipped.ang_mom - 0.3).abs() < 1e-10);
    }

    #[test]
    fn radial_and_static_cases() {
        let g = grid();
        let params = PhysicsParams::new(2, 3.0, &[1.0, 1.0], 0.4).unwrap();
        let f = gaussian(&g);
        assert!(evaluate(&f, &params).unwrap().ang_mom.abs() < 1e-14);
        let still = params.with_rotation(0.0);
        assert_eq!(apply_angular_momentum(&f, &still).unwrap().max_abs(), 0.0);
        let r = evaluate(&f, &still).unwrap();
        assert!((emii_bound_check(&f, &still, 2.0).unwrap() - r.kinetic).abs() < 1e-14);
        let zero = evaluate(&ComplexField::zeros(&g), &params).unwrap();
        assert_eq!(zero, FunctionalReport::default());
    }

    #[test]
    fn csv_round_trip() {
        let g = grid();
        let params = PhysicsParams::new(2, 5.0, &[1.0, 1.0], 0.2).unwrap();
        let r = evaluate(&vortex(&g), &params).unwrap();
        let (t, back) = FunctionalReport::parse_csv_row(&r.csv_row(1.25)).unwrap();
        assert_eq!(t, 1.25);
        assert_eq!(back.energy, r.energy);
        assert_eq!(back.sigma_norm2, r.sigma_norm2);
        assert_eq!(FunctionalReport::csv_header(), "t,M,kinetic,potential,lp1,ang_mom,quad_form,energy,sigma_norm2");
    }
}
