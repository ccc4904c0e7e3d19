//! Command-line front end: config parsing, task dispatch and output.
//!
//! Every flag has an environment fallback with the `ANTICHIRAL_` prefix
//! (`ANTICHIRAL_CONFIG`, `ANTICHIRAL_PRESET`, `ANTICHIRAL_OUT`,
//! `ANTICHIRAL_FORMAT`, `ANTICHIRAL_WORKERS`, `ANTICHIRAL_SEED`). Flags beat
//! the environment, which beats the config file.

pub mod config;
pub mod error;
pub mod output;
pub mod presets;
pub mod tasks;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

pub use config::{Format, RunConfig, Task};
pub use error::{CliError, CliResult, ExitCode};
pub use output::{Payload, Table};

#[derive(Debug, Parser)]
#[command(name = "antichiral", version, about = "Antichiral hinge-state lattice simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Band structure with hinge/surface/bulk tags per k_z.
    Bands(RunArgs),
    /// Wannier-sector polarizations and quadrupole per k_z.
    Invariants(RunArgs),
    /// Reduced-2D phase labels on a (γ₁, γ₂) grid plus the model's k_z path.
    PhaseDiagram(RunArgs),
    /// Closed-form hinge modes and hinge k_z intervals.
    Hinge(RunArgs),
    /// Hinge excitation transmission maps and displacement metrics.
    Transmit(RunArgs),
    /// Round-trip optics versus lattice couplings.
    DeviceVerify(RunArgs),
    /// List bundled presets, or print one.
    Presets { name: Option<String> },
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// TOML config, or a JSON config / result envelope.
    #[arg(long, env = "ANTICHIRAL_CONFIG", conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Bundled preset name (see `antichiral presets`).
    #[arg(long, env = "ANTICHIRAL_PRESET")]
    pub preset: Option<String>,
    #[arg(long, env = "ANTICHIRAL_OUT")]
    pub out: Option<PathBuf>,
    #[arg(long, env = "ANTICHIRAL_FORMAT", value_enum)]
    pub format: Option<Format>,
    /// 0 = all cores, 1 = sequential.
    #[arg(long, env = "ANTICHIRAL_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, env = "ANTICHIRAL_SEED")]
    pub seed: Option<u64>,
}

impl Command {
    fn task(&self) -> Option<(Task, &RunArgs)> {
        match self {
            Command::Bands(a) => Some((Task::Bands, a)),
            Command::Invariants(a) => Some((Task::Invariants, a)),
            Command::PhaseDiagram(a) => Some((Task::PhaseDiagram, a)),
            Command::Hinge(a) => Some((Task::Hinge, a)),
            Command::Transmit(a) => Some((Task::Transmit, a)),
            Command::DeviceVerify(a) => Some((Task::DeviceVerify, a)),
            Command::Presets { .. } => None,
        }
    }
}

pub fn preset(name: &str) -> CliResult<RunConfig> {
    let text = presets::get(name).ok_or_else(|| {
        CliError::config(
            "preset",
            format!("unknown preset `{name}`; known: {}", presets::names().collect::<Vec<_>>().join(", ")),
        )
    })?;
    RunConfig::from_toml(text)
}

/// Loads, overrides, selects and validates the configuration for `task`.
pub fn resolve(task: Task, args: &RunArgs) -> CliResult<RunConfig> {
    let mut config = match (&args.config, &args.preset) {
        (Some(p), _) => RunConfig::load(p)?,
        (None, Some(name)) => preset(name)?,
        (None, None) => RunConfig::default(),
    };
    if let Some(p) = &args.out {
        config.output.path = Some(p.clone());
    }
    if let Some(f) = args.format {
        config.output.format = f;
    }
    if let Some(w) = args.workers {
        config.run.workers = w;
    }
    if let Some(s) = args.seed {
        config.run.seed = s;
    }
    config.select(task)?;
    config.validate()?;
    Ok(config)
}

/// Validates and runs `config` for `task`.
pub fn execute(task: Task, config: &RunConfig) -> CliResult<Payload> {
    let mut c = config.clone();
    c.select(task)?;
    c.validate()?;
    tasks::run(task, &c)
}

fn report(e: &CliError, stderr: &mut dyn Write) -> i32 {
    let text = serde_json::to_string(&serde_json::json!({ "error": e.report() })).expect("report serializes");
    let _ = writeln!(stderr, "{text}");
    e.exit_code().0
}

/// Full CLI entry point; returns the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::CONFIG.0 } else { ExitCode::SUCCESS.0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { stderr.write_all(text.as_bytes()) } else { stdout.write_all(text.as_bytes()) };
            return code;
        }
    };
    if let Command::Presets { name } = &cli.command {
        return match name {
            None => {
                for n in presets::names() {
                    let _ = writeln!(stdout, "{n}");
                }
                0
            }
            Some(n) => match presets::get(n) {
                Some(text) => {
                    let _ = stdout.write_all(text.as_bytes());
                    0
                }
                None => report(&CliError::config("preset", format!("unknown preset `{n}`")), stderr),
            },
        };
    }
    let (task, args) = cli.command.task().expect("run command");
    let result = resolve(task, args).and_then(|config| {
        let start = Instant::now();
        let payload = tasks::run(task, &config)?;
        output::emit(task, &config, &payload, start.elapsed().as_secs_f64(), stdout)
    });
    match result {
        Ok(()) => 0,
        Err(e) => report(&e, stderr),
    }
}
