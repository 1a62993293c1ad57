mod config;
mod run;
mod validate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rotnls::qprofile::load_or_solve;
use rotnls::{GridSpec, PhysicsParams};
use serde::Serialize;

use config::{load_config, ExperimentConfig, Scenario};
use run::{Completion, Context};
use validate::{validate, ValidationReport};

const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_BLOWUP: u8 = 4;

#[derive(Parser)]
#[command(name = "rotnls", version, about = "Focusing NLS with rotation in a harmonic trap")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output` in the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for all randomness (overrides `seed` in the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for scenario-internal parallelism.
    #[arg(long)]
    threads: Option<usize>,
    /// Check the configuration and exit without running.
    #[arg(long)]
    validate_only: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve (or load from cache) the radial ground state Q.
    QReference {
        #[command(flatten)]
        common: Common,
        /// Dimension; with `--p`, no config file is needed.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Lowest eigenpair of the trap-plus-rotation operator.
    Spectrum(Common),
    /// Nehari or local ground state with certification.
    Groundstate(Common),
    /// Time evolution with diagnostics and blow-up monitoring.
    Evolve(Common),
    /// Blow-up versus global-existence classification of initial data.
    Classify(Common),
    /// Orbital stability experiment around a ground state.
    Stability(Common),
    /// Local minimizers over a list of masses with the multiplier trend.
    Sweep(Common),
    /// Large-frequency sweep of rescaled Nehari states.
    Ls1Trend(Common),
}

impl Command {
    fn parts(&self) -> (Scenario, &Common) {
        match self {
            Command::QReference { common, .. } => (Scenario::QReference, common),
            Command::Spectrum(c) => (Scenario::Spectrum, c),
            Command::Groundstate(c) => (Scenario::Groundstate, c),
            Command::Evolve(c) => (Scenario::Evolve, c),
            Command::Classify(c) => (Scenario::Classify, c),
            Command::Stability(c) => (Scenario::Stability, c),
            Command::Sweep(c) => (Scenario::Sweep, c),
            Command::Ls1Trend(c) => (Scenario::Ls1Trend, c),
        }
    }
}

#[derive(Serialize)]
struct Versions {
    rotnls_cli: &'static str,
    rotnls_core: &'static str,
}

#[derive(Serialize)]
struct Manifest<'a> {
    scenario: &'static str,
    config: &'a ExperimentConfig,
    seed: u64,
    threads: Option<usize>,
    versions: Versions,
    started_unix_s: u64,
    wall_time_s: f64,
    exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    artifacts: &'a [String],
    summary: &'a serde_json::Map<String, serde_json::Value>,
}

/// Configuration for `q-reference --n N --p P` without a config file. The grid and trap
/// are placeholders; Q itself does not depend on them.
fn q_reference_config(n: usize, p: f64, tol: f64) -> Result<ExperimentConfig, String> {
    let physics = PhysicsParams::new(n, p, &vec![1.0; n], 0.0).map_err(|e| e.to_string())?;
    let mut cfg: ExperimentConfig = serde_json::from_value(serde_json::json!({
        "scenario": "q-reference",
        "grid": GridSpec { dim: n, half_widths: vec![8.0; n], points: vec![64; n] },
        "physics": physics,
    }))
    .map_err(|e| e.to_string())?;
    cfg.solver.q_tol = tol;
    Ok(cfg)
}

fn resolve_config(command: &Command) -> Result<ExperimentConfig, String> {
    let (_, common) = command.parts();
    let mut cfg = match (command, &common.config) {
        (_, Some(path)) => load_config(path).map_err(|e| format!("{}: {e}", path.display()))?,
        (Command::QReference { n: Some(n), p: Some(p), tol, .. }, None) => q_reference_config(*n, *p, *tol)?,
        _ => return Err("--config is required for this subcommand".into()),
    };
    if let Command::QReference { n, p, .. } = command {
        if n.is_some_and(|n| n != cfg.physics.dim) || p.is_some_and(|p| p != cfg.physics.p) {
            return Err("--n/--p disagree with the config".into());
        }
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if common.threads.is_some() {
        cfg.threads = common.threads;
    }
    if let Some(out) = &common.out {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn output_dir(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output.clone().unwrap_or_else(|| PathBuf::from("rotnls-out"))
}

fn validation(cfg: &ExperimentConfig, scenario: Scenario, cache: &Path) -> ValidationReport {
    validate(cfg, scenario, |dim, p| match load_or_solve(cache, dim, p, cfg.solver.q_tol) {
        Ok((q, _)) => Some(q.c_gn),
        Err(e) => {
            log::error!("reference profile for the q0 check failed: {e}");
            None
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (scenario, common) = cli.command.parts();
    let cfg = match resolve_config(&cli.command) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let out = output_dir(&cfg);
    let ctx = Context::new(&cfg, &out);
    let report = validation(&cfg, scenario, &ctx.q_cache_dir());
    if !report.is_ok() {
        for v in &report.violations {
            eprintln!("config error: {v}");
        }
        return ExitCode::from(EXIT_CONFIG);
    }
    if common.validate_only {
        println!("{}: configuration is valid", scenario.name());
        return ExitCode::SUCCESS;
    }
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            log::warn!("could not size the thread pool: {e}");
        }
    }

    let started = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let clock = Instant::now();
    let mut ctx = ctx;
    let result = run::run(&mut ctx, scenario);
    let (code, error) = match &result {
        Ok(Completion::Done) => (0, None),
        Ok(Completion::BlowupTerminated) => (EXIT_BLOWUP, None),
        Err(e) => (EXIT_SOLVER, Some(e.to_string())),
    };
    if let Some(e) = &error {
        eprintln!("{} failed: {e}", scenario.name());
    }
    let manifest = Manifest {
        scenario: scenario.name(),
        config: &cfg,
        seed: cfg.seed,
        threads: cfg.threads,
        versions: Versions { rotnls_cli: env!("CARGO_PKG_VERSION"), rotnls_core: rotnls::VERSION },
        started_unix_s: started,
        wall_time_s: clock.elapsed().as_secs_f64(),
        exit_code: code,
        error,
        artifacts: &ctx.outputs.artifacts,
        summary: &ctx.outputs.summary,
    };
    let written = std::fs::create_dir_all(&out)
        .and_then(|_| std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest).unwrap_or_default() + "\n"));
    if let Err(e) = written {
        eprintln!("cannot write manifest: {e}");
        return ExitCode::from(EXIT_SOLVER);
    }
    log::info!("{} finished in {:.2} s; artifacts in {}", scenario.name(), manifest.wall_time_s, out.display());
    ExitCode::from(code)
}
