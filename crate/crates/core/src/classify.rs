//! Blow-up versus global-existence classification of initial data.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{grad_product, DiagnosticsRow};
use crate::error::{Error, Result};
use crate::field::ComplexField;
use crate::functionals::evaluate;
use crate::params::PhysicsParams;
use crate::qprofile::{thresholds, QProfile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LMode {
    /// Isotropic trap: `l(u(t))` is conserved, so `l = l(u0)`.
    IsotropicExact,
    /// Running minimum over a sampled trajectory; an upper bound for the infimum.
    TrajectoryMin,
    /// Lower bound from energy trapping for small data.
    SmalldataBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LEstimate {
    pub l: f64,
    pub mode: LMode,
    /// Largest gap between samples, for the trajectory mode.
    pub sampling_interval: Option<f64>,
    /// Bound on `(||grad u||^2 + int V|u|^2)/2` along the flow, for the small-data mode.
    pub energy_bound: Option<f64>,
}

pub fn estimate_l_isotropic(u0: &ComplexField, params: &PhysicsParams) -> Result<LEstimate> {
    if !params.is_isotropic() {
        return Err(Error::InvalidParams("exact l needs equal trap frequencies".into()));
    }
    let r = evaluate(u0, params)?;
    Ok(LEstimate { l: r.ang_mom, mode: LMode::IsotropicExact, sampling_interval: None, energy_bound: None })
}

pub fn estimate_l_trajectory(rows: &[DiagnosticsRow]) -> Result<LEstimate> {
    if rows.is_empty() {
        return Err(Error::Degenerate("empty trajectory".into()));
    }
    let l = rows.iter().map(|r| r.report.ang_mom).fold(f64::INFINITY, f64::min);
    let gap = rows.windows(2).map(|w| w[1].t - w[0].t).fold(0.0, f64::max);
    Ok(LEstimate { l, mode: LMode::TrajectoryMin, sampling_interval: Some(gap), energy_bound: None })
}

/// Small-data lower bound on `l`.
///
/// With `X = (K + int V|u|^2)/2` and `eps = |Omega|/gamma`, `|l| <= eps X`, and
/// conservation gives `g(X(t)) <= E` for `g(X) = (1 - eps) X - C X^{N(p-1)/4}`. If the
/// datum sits left of the maximizer `X*` of `g` with `E < g(X*)`, then `X(t)` stays below
/// the smaller root `X_b` of `g = E`, and `l >= -eps X_b`.
pub fn estimate_l_smalldata(u0: &ComplexField, params: &PhysicsParams, c_gn: f64, sigma_threshold: f64) -> Result<LEstimate> {
    params.require_supercritical()?;
    params.require_slow_rotation()?;
    let r = evaluate(u0, params)?;
    if r.sigma_norm2.sqrt() >= sigma_threshold {
        return Err(Error::Regime(format!(
            "||u0||_Sigma = {:.6e} is not below the small-data threshold {sigma_threshold}",
            r.sigma_norm2.sqrt()
        )));
    }
    let eps = params.omega_rot / params.gamma();
    let a = params.dim as f64 * (params.p - 1.0) / 4.0;
    let b = 0.5 * (params.p + 1.0 - params.dim as f64 * (params.p - 1.0) / 2.0);
    let c = 2.0 * c_gn / (params.p + 1.0) * r.mass.powf(b) * 2f64.powf(a);
    let g = |x: f64| (1.0 - eps) * x - c * x.powf(a);
    let x_star = ((1.0 - eps) / (c * a)).powf(1.0 / (a - 1.0));
    let x0 = 0.5 * (r.kinetic + r.potential);
    let e = r.energy;
    if !(x0 < x_star && e < g(x_star)) {
        return Err(Error::Regime("datum is not trapped below the energy barrier".into()));
    }
    // g is increasing on (0, x*), so bisect for g(X) = max(E, 0).
    let target = e.max(0.0);
    let (mut lo, mut hi) = (0.0, x_star);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let xb = hi.max(x0);
    Ok(LEstimate { l: -eps * xb, mode: LMode::SmalldataBound, sampling_interval: None, energy_bound: Some(xb) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    KPlus,
    KMinus,
    NegativeEnergyBlowup,
    Unclassified,
}

impl Verdict {
    pub fn predicts_blowup(self) -> bool {
        matches!(self, Verdict::KMinus | Verdict::NegativeEnergyBlowup)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub s_c: f64,
    pub l_estimate: f64,
    pub l_mode: LMode,
    /// Set when `l` comes from a sampled trajectory.
    pub trajectory_conditional: bool,
    pub energy: f64,
    pub mass: f64,
    /// `(E(u0) - l)^{s_c} M(u0)^{1 - s_c}`, or `None` when `E(u0) < l`.
    pub me_product: Option<f64>,
    pub me_threshold: f64,
    pub grad_product: f64,
    pub grad_threshold: f64,
    pub verdict: Verdict,
    /// `((p-1)N/4)^{1/(s_c(p-1))}`.
    pub lower_bound_constant: f64,
    /// The full gradient lower bound for this datum.
    pub gradient_lower_bound: f64,
}

/// Relative width of the band around each threshold reported as unclassified.
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-6;

pub fn classify(u0: &ComplexField, params: &PhysicsParams, q: &QProfile, l: &LEstimate) -> Result<ClassificationReport> {
    classify_with_tol(u0, params, q, l, DEFAULT_BOUNDARY_TOL)
}

pub fn classify_with_tol(
    u0: &ComplexField,
    params: &PhysicsParams,
    q: &QProfile,
    l: &LEstimate,
    boundary_tol: f64,
) -> Result<ClassificationReport> {
    params.require_supercritical()?;
    if q.dim != params.dim || q.p != params.p {
        return Err(Error::InvalidParams("reference profile does not match (N, p)".into()));
    }
    if !l.l.is_finite() {
        return Err(Error::InvalidParams("l must be finite".into()));
    }
    let r = evaluate(u0, params)?;
    let th = thresholds(q, r.mass)?;
    let s_c = th.s_c;
    let gp = grad_product(r.kinetic, r.mass, s_c);
    let excess = r.energy - l.l;
    let me_product = (excess >= 0.0).then(|| excess.powf(s_c) * r.mass.powf(1.0 - s_c));
    let near = |a: f64, b: f64| (a - b).abs() <= boundary_tol * b.abs();
    let verdict = match me_product {
        None => Verdict::NegativeEnergyBlowup,
        Some(me) if me < th.me_threshold && !near(me, th.me_threshold) => {
            if near(gp, th.grad_threshold) {
                Verdict::Unclassified
            } else if gp < th.grad_threshold {
                Verdict::KPlus
            } else {
                Verdict::KMinus
            }
        }
        Some(_) => Verdict::Unclassified,
    };
    let n = params.dim as f64;
    let p = params.p;
    let lower_bound_constant = ((p - 1.0) * n / 4.0).powf(1.0 / (s_c * (p - 1.0)));
    let gradient_lower_bound = lower_bound_constant * (q.mass / r.mass).sqrt().powf((1.0 - s_c) / s_c) * q.grad.sqrt();
    Ok(ClassificationReport {
        s_c,
        l_estimate: l.l,
        l_mode: l.mode,
        trajectory_conditional: l.mode == LMode::TrajectoryMin,
        energy: r.energy,
        mass: r.mass,
        me_product,
        me_threshold: th.me_threshold,
        grad_product: gp,
        grad_threshold: th.grad_threshold,
        verdict,
        lower_bound_constant,
        gradient_lower_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundSample {
    pub t: f64,
    pub grad_norm: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Per-sample check of the gradient lower bound for negative-energy data, on samples
/// whose tail fraction is within `tail_threshold`.
pub fn check_gradient_lowerbound(
    rows: &[DiagnosticsRow],
    report: &ClassificationReport,
    tail_threshold: f64,
) -> Result<Vec<LowerBoundSample>> {
    if report.verdict != Verdict::NegativeEnergyBlowup {
        return Err(Error::WrongVerdict(format!("{:?}", report.verdict)));
    }
    Ok(rows
        .iter()
        .take_while(|r| r.tail_fraction <= tail_threshold)
        .map(|r| LowerBoundSample {
            t: r.t,
            grad_norm: r.grad_norm,
            bound: report.gradient_lower_bound,
            pass: r.grad_norm >= report.gradient_lower_bound,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::qprofile::solve_q;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use std::sync::OnceLock;

    fn q25() -> &'static QProfile {
        static Q: OnceLock<QProfile> = OnceLock::new();
        Q.get_or_init(|| solve_q(2, 5.0, 1e-10).unwrap())
    }

    fn params() -> PhysicsParams {
        PhysicsParams::new(2, 5.0, &[1.0, 1.0], 0.2).unwrap()
    }

    fn gaussian(amp: f64, width: f64) -> ComplexField {
        let grid = make_grid(2, &[6.0, 6.0], &[128, 128]).unwrap();
        ComplexField::from_fn(&grid, |x| Complex64::new(amp * (-0.5 * (x[0] * x[0] + x[1] * x[1]) / (width * width)).exp(), 0.0))
    }

    fn verdict_of(u: &ComplexField) -> ClassificationReport {
        let l = estimate_l_isotropic(u, &params()).unwrap();
        classify(u, &params(), q25(), &l).unwrap()
    }

    #[test]
    fn tiny_gaussian_is_in_k_plus() {
        let r = verdict_of(&gaussian(0.3, 1.0));
        assert_eq!(r.verdict, Verdict::KPlus);
        assert_eq!(r.l_mode, LMode::IsotropicExact);
        assert!(r.l_estimate.abs() < 1e-12);
    }

    #[test]
    fn concentrated_gaussians_predict_blowup() {
        // Closed forms for A e^{-r^2/(2w^2)} with gamma = 1 and l = 0:
        // E = pi A^2 (1 + w^4)/2 - pi A^6 w^2 / 9, M = pi A^2 w^2.
        let r = verdict_of(&gaussian(2.0, 0.5));
        let e = std::f64::consts::PI * 4.0 * (1.0 + 0.0625) / 2.0 - std::f64::consts::PI * 64.0 * 0.25 / 9.0;
        assert!((r.energy - e).abs() < 1e-8 * e.abs());
        assert_eq!(r.verdict, Verdict::KMinus);
        assert_eq!(verdict_of(&gaussian(5f64.sqrt(), 0.5)).verdict, Verdict::NegativeEnergyBlowup);
    }

    #[test]
    fn free_profile_sits_on_the_gradient_threshold() {
        let grid = make_grid(2, &[10.0, 10.0], &[256, 256]).unwrap();
        let u = q25().to_field(&grid).unwrap();
        let r = verdict_of(&u);
        assert!((r.grad_product / r.grad_threshold - 1.0).abs() < 1e-7, "{}", r.grad_product / r.grad_threshold - 1.0);
        assert_eq!(r.verdict, Verdict::Unclassified);
    }

    #[test]
    fn lower_bound_prefactor_and_mass_scaling() {
        let a = verdict_of(&gaussian(5f64.sqrt(), 0.5));
        assert!((a.lower_bound_constant - 2f64.sqrt()).abs() < 1e-14);
        let b = verdict_of(&gaussian(10f64.sqrt(), 0.5));
        assert!((b.mass / a.mass - 2.0).abs() < 1e-12);
        let expect = 2f64.powf(-(1.0 - a.s_c) / (2.0 * a.s_c));
        assert!((b.gradient_lower_bound / a.gradient_lower_bound - expect).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_check_needs_negative_energy_verdict() {
        let r = verdict_of(&gaussian(0.3, 1.0));
        assert!(matches!(check_gradient_lowerbound(&[], &r, 0.01), Err(Error::WrongVerdict(_))));
    }

    #[test]
    fn vortex_angular_momentum_is_minus_omega() {
        let grid = make_grid(2, &[8.0, 8.0], &[64, 64]).unwrap();
        let params = params().with_sign(-1.0).unwrap();
        let v = ComplexField::from_fn(&grid, |x| {
            Complex64::new(x[0], x[1]) * ((-0.5 * (x[0] * x[0] + x[1] * x[1])).exp() / std::f64::consts::PI.sqrt())
        });
        let l = estimate_l_isotropic(&v, &params).unwrap();
        assert!((l.l + 0.2).abs() < 1e-10);
    }

    #[test]
    fn anisotropic_trap_rejects_exact_mode() {
        let p = PhysicsParams::new(2, 5.0, &[1.0, 1.5], 0.2).unwrap();
        assert!(estimate_l_isotropic(&gaussian(0.3, 1.0), &p).is_err());
    }

    #[test]
    fn small_data_bound_lies_below_initial_angular_momentum() {
        let grid = make_grid(2, &[8.0, 8.0], &[64, 64]).unwrap();
        let p = PhysicsParams::new(2, 5.0, &[1.0, 1.5], 0.3).unwrap();
        let u = ComplexField::from_fn(&grid, |x| Complex64::new(0.2 * x[0], 0.1 * x[1] + 0.2) * (-0.5 * (x[0] * x[0] + x[1] * x[1])).exp());
        let est = estimate_l_smalldata(&u, &p, q25().c_gn, 1.0).unwrap();
        let l0 = evaluate(&u, &p).unwrap().ang_mom;
        assert!(est.l <= l0);
        assert!(est.l > -1.0);
        assert!(estimate_l_smalldata(&u, &p, q25().c_gn, 1e-3).is_err());
        let r = classify(&u, &p, q25(), &est).unwrap();
        assert_eq!(r.verdict, Verdict::KPlus);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn classification_is_phase_invariant(theta in 0.0f64..6.3, amp in 0.2f64..2.5) {
            let u = gaussian(amp, 0.7);
            let mut v = u.clone();
            v.scale_complex(Complex64::from_polar(1.0, theta));
            let a = verdict_of(&u);
            let b = verdict_of(&v);
            prop_assert_eq!(a.verdict, b.verdict);
            prop_assert!((a.grad_product - b.grad_product).abs() <= 1e-12 * a.grad_product);
            prop_assert!((a.energy - b.energy).abs() <= 1e-12 * a.energy.abs().max(1.0));
        }
    }
}
