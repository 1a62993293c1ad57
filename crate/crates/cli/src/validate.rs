//! Static checks run before any scenario executes.

use rotnls::classify::LMode;
use rotnls::groundstate::LocalMinimizationSpec;
use serde::Serialize;

use crate::config::{ExperimentConfig, GroundStateSection, InitialData, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { path: path.into(), message: message.into() });
    }
}

/// Validate `cfg` for `scenario`. `c_gn` supplies the sharp GN constant for `(N, p)`
/// and is only called when a local-minimization radius has to be checked against `q0`.
pub fn validate(cfg: &ExperimentConfig, scenario: Scenario, c_gn: impl FnOnce(usize, f64) -> Option<f64>) -> ValidationReport {
    let mut report = ValidationReport::default();
    let params = &cfg.physics;

    if let Some(s) = cfg.scenario {
        if s != scenario {
            report.push("scenario", format!("config is for `{}` but `{}` was requested", s.name(), scenario.name()));
        }
    }
    if let Err(e) = params.validate() {
        report.push("physics", e.to_string());
        return report;
    }
    if cfg.grid.dim != params.dim {
        report.push("grid.dim", format!("grid has dimension {} but physics has {}", cfg.grid.dim, params.dim));
    } else if let Err(e) = cfg.grid.build() {
        report.push("grid", e.to_string());
    }
    if cfg.threads == Some(0) {
        report.push("threads", "must be at least 1");
    }

    if scenario.is_variational() && params.require_slow_rotation().is_err() {
        report.push(
            "physics.omega_rot",
            format!("|Omega| = {} must be below gamma = {} for variational scenarios", params.omega_rot, params.gamma()),
        );
    }
    let s_c = params.s_c();
    let needs_supercritical = !matches!(scenario, Scenario::Spectrum | Scenario::Evolve);
    if scenario == Scenario::Classify && !(s_c > 0.0 && s_c < 1.0) {
        report.push("physics.p", format!("classification needs 0 < s_c < 1, got s_c = {s_c}"));
    } else if needs_supercritical && s_c <= 0.0 {
        report.push("physics.p", format!("p = {} is not mass supercritical (s_c = {s_c})", params.p));
    }

    let s = &cfg.solver;
    if !(s.tol > 0.0 && s.eigen_tol > 0.0 && s.q_tol > 0.0) {
        report.push("solver", "tolerances must be positive");
    }

    if let Some(InitialData::Gaussian { width, center, .. }) = &cfg.initial {
        if !(*width > 0.0) {
            report.push("initial.width", "must be positive");
        }
        if center.len() > params.dim {
            report.push("initial.center", format!("has {} entries for a {}-dimensional grid", center.len(), params.dim));
        }
    }
    if let Some(InitialData::Random { mass, .. }) = &cfg.initial {
        if !(*mass > 0.0) {
            report.push("initial.mass", "must be positive");
        }
    }
    if let Some(ev) = &cfg.evolve {
        if !(ev.horizon > 0.0) {
            report.push("evolve.horizon", "must be positive");
        }
        if !(ev.dt > 0.0) {
            report.push("evolve.dt", "must be positive");
        }
        if ev.sample_every == 0 {
            report.push("evolve.sample_every", "must be at least 1");
        }
    }

    let mut require = |present: bool, key: &str| {
        if !present {
            report.push(key.to_string(), format!("section required by `{}`", scenario.name()));
        }
    };
    match scenario {
        Scenario::Evolve => {
            require(cfg.initial.is_some(), "initial");
            require(cfg.evolve.is_some(), "evolve");
        }
        Scenario::Classify => {
            require(cfg.initial.is_some(), "initial");
            if cfg.classify.l_mode == LMode::TrajectoryMin {
                require(cfg.evolve.is_some(), "evolve");
            }
        }
        Scenario::Groundstate => require(cfg.groundstate.is_some(), "groundstate"),
        Scenario::Stability => {
            require(cfg.groundstate.is_some(), "groundstate");
            require(cfg.stability.is_some(), "stability");
            require(cfg.evolve.is_some(), "evolve");
        }
        Scenario::Sweep => require(cfg.sweep.is_some(), "sweep"),
        Scenario::Ls1Trend => require(cfg.ls1.is_some(), "ls1"),
        Scenario::QReference | Scenario::Spectrum => {}
    }

    if scenario == Scenario::Classify && cfg.classify.l_mode == LMode::IsotropicExact && !params.is_isotropic() {
        report.push("classify.l_mode", "isotropic_exact needs equal trap frequencies");
    }
    if let Some(st) = &cfg.stability {
        if st.deltas.is_empty() || st.deltas.iter().any(|d| !(*d > 0.0)) {
            report.push("stability.deltas", "must be a nonempty list of positive numbers");
        }
    }
    if let Some(ls) = &cfg.ls1 {
        if ls.omegas.is_empty() || ls.omegas.iter().any(|w| !(*w > 0.0)) {
            report.push("ls1.omegas", "must be a nonempty list of positive frequencies");
        }
    }

    // Radius checks against q0 need the GN constant; skip them if the earlier checks failed.
    let mut radii: Vec<(String, f64, f64)> = Vec::new();
    if matches!(scenario, Scenario::Groundstate | Scenario::Stability) {
        if let Some(GroundStateSection::Local { q, r }) = cfg.groundstate {
            radii.push(("groundstate.q".into(), q, r));
        }
    }
    if scenario == Scenario::Sweep {
        if let Some(sw) = &cfg.sweep {
            radii.extend(sw.qs.iter().enumerate().map(|(i, &q)| (format!("sweep.qs[{i}]"), q, sw.r)));
        }
    }
    if !radii.is_empty() && report.is_ok() {
        match c_gn(params.dim, params.p) {
            Some(c) => {
                for (path, q, r) in radii {
                    match LocalMinimizationSpec::new(q, r, params, c) {
                        Ok(spec) if q < spec.q0_estimate => {}
                        Ok(spec) => report.push(path, format!("q = {q} is not below q0 = {:.6e} for r = {r}", spec.q0_estimate)),
                        Err(e) => report.push(path, e.to_string()),
                    }
                }
            }
            None => report.push("physics", "could not obtain the GN constant for the q0 check"),
        }
    }
    report
}
