//! Experiment configuration: one TOML file per run.
//!
//! Every section except `[grid]` and `[physics]` is optional and has documented
//! defaults; see `docs/config.md`. Unknown keys are rejected so typos surface with
//! their full key path.

use std::path::{Path, PathBuf};

use rotnls::classify::LMode;
use rotnls::dynamics::{DtShrink, EvolveConfig, MonitorConfig};
use rotnls::stability::Direction;
use rotnls::{GridSpec, PhysicsParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    QReference,
    Spectrum,
    Groundstate,
    Evolve,
    Classify,
    Stability,
    Sweep,
    Ls1Trend,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::QReference => "q-reference",
            Scenario::Spectrum => "spectrum",
            Scenario::Groundstate => "groundstate",
            Scenario::Evolve => "evolve",
            Scenario::Classify => "classify",
            Scenario::Stability => "stability",
            Scenario::Sweep => "sweep",
            Scenario::Ls1Trend => "ls1-trend",
        }
    }

    /// Scenarios that solve a variational problem and therefore need `|Omega| < gamma`.
    pub fn is_variational(self) -> bool {
        matches!(self, Scenario::Spectrum | Scenario::Groundstate | Scenario::Stability | Scenario::Sweep | Scenario::Ls1Trend)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub scenario: Option<Scenario>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub grid: GridSpec,
    pub physics: PhysicsParams,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub initial: Option<InitialData>,
    #[serde(default)]
    pub evolve: Option<EvolveSection>,
    #[serde(default)]
    pub groundstate: Option<GroundStateSection>,
    #[serde(default)]
    pub classify: ClassifySection,
    #[serde(default)]
    pub stability: Option<StabilitySection>,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub ls1: Option<Ls1Section>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tol: f64,
    pub max_iterations: usize,
    pub eigen_tol: f64,
    pub q_tol: f64,
    /// Directory for cached Q profiles; defaults to `<output>/cache`.
    pub q_cache: Option<PathBuf>,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self { tol: 1e-8, max_iterations: 20_000, eigen_tol: 1e-10, q_tol: 1e-10, q_cache: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum InitialData {
    /// `amplitude * exp(-|x - center|^2 / (2 width^2)) * exp(i charge theta)`, with
    /// `theta` the polar angle about `center`.
    Gaussian {
        amplitude: f64,
        width: f64,
        #[serde(default)]
        center: Vec<f64>,
        #[serde(default)]
        charge: i32,
    },
    /// Smooth random field drawn from the run seed, rescaled to `mass`.
    Random {
        #[serde(default = "default_bumps")]
        bumps: usize,
        mass: f64,
    },
    Snapshot { path: PathBuf },
}

fn default_bumps() -> usize {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolveSection {
    pub horizon: f64,
    pub dt: f64,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    /// Write an RNLS1 snapshot every this many samples; 0 disables.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub monitor: MonitorConfig,
    #[serde(default)]
    pub dt_shrink: Option<DtShrink>,
}

fn default_sample_every() -> usize {
    10
}

impl EvolveSection {
    pub fn to_config(&self) -> EvolveConfig {
        EvolveConfig {
            horizon: self.horizon,
            dt: self.dt,
            sample_every: self.sample_every,
            monitor: self.monitor,
            dt_shrink: self.dt_shrink,
            nonlinear: true,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum GroundStateSection {
    Nehari { omega: f64 },
    Local { q: f64, r: f64 },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifySection {
    pub l_mode: LMode,
    /// Smallness threshold on `||u0||_Sigma` for the `smalldata_bound` mode.
    pub sigma_threshold: f64,
    pub boundary_tol: f64,
}

impl Default for ClassifySection {
    fn default() -> Self {
        Self { l_mode: LMode::IsotropicExact, sigma_threshold: 1.0, boundary_tol: rotnls::classify::DEFAULT_BOUNDARY_TOL }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    pub deltas: Vec<f64>,
    #[serde(default = "default_directions")]
    pub directions: Vec<Direction>,
}

fn default_directions() -> Vec<Direction> {
    vec![Direction::Random, Direction::Scaling]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub qs: Vec<f64>,
    pub r: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ls1Section {
    pub omegas: Vec<f64>,
}

/// Parse failure with the dotted path of the offending key.
#[derive(Debug)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = toml::Deserializer::new(text);
    serde_path_to_error::deserialize(de).map_err(|e| ConfigError {
        path: e.path().to_string(),
        message: e.inner().message().trim().to_string(),
    })
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError { path: String::new(), message: format!("cannot read {}: {e}", path.display()) })?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[grid]
dim = 2
half_widths = [8.0, 8.0]
points = [64, 64]

[physics]
dim = 2
p = 5.0
gammas = [1.0, 1.0]
omega_rot = 0.2
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.solver.tol, 1e-8);
        assert_eq!(cfg.physics.lomega_sign, 1.0);
        assert_eq!(cfg.classify.l_mode, LMode::IsotropicExact);
    }

    #[test]
    fn errors_carry_key_paths() {
        let err = parse_config(&format!("{MINIMAL}\n[evolve]\nhorizon = 1.0\ndt = \"fast\"\n")).unwrap_err();
        assert_eq!(err.path, "evolve.dt");
        let err = parse_config(&MINIMAL.replace("omega_rot", "omega_rott")).unwrap_err();
        assert!(err.path.starts_with("physics"), "{err}");
    }

    #[test]
    fn tagged_sections_parse() {
        let text = format!(
            "{MINIMAL}\n[initial]\nkind = \"gaussian\"\namplitude = 0.5\nwidth = 1.0\n\n[groundstate]\nkind = \"local\"\nq = 0.1\nr = 4.0\n"
        );
        let cfg = parse_config(&text).unwrap();
        assert!(matches!(cfg.initial, Some(InitialData::Gaussian { charge: 0, .. })));
        assert!(matches!(cfg.groundstate, Some(GroundStateSection::Local { .. })));
    }
}
