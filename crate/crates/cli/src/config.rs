//! Run configuration: one model, one geometry and exactly one task block.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use antichiral_core::lattice::Face;
use antichiral_core::lattice::{Axis, BoundarySpec, ModelParams};
use antichiral_core::photonic::SyntheticSpace;
use antichiral_core::spectra::LocalizationRule;
use antichiral_core::transport::{DisorderMode, SolverChoice, TransportPath};
use antichiral_core::Corner;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    Bands,
    Invariants,
    PhaseDiagram,
    Hinge,
    Transmit,
    DeviceVerify,
}

impl Task {
    pub const ALL: [Task; 6] =
        [Task::Bands, Task::Invariants, Task::PhaseDiagram, Task::Hinge, Task::Transmit, Task::DeviceVerify];

    /// Subcommand name.
    pub fn name(self) -> &'static str {
        match self {
            Task::Bands => "bands",
            Task::Invariants => "invariants",
            Task::PhaseDiagram => "phase-diagram",
            Task::Hinge => "hinge",
            Task::Transmit => "transmit",
            Task::DeviceVerify => "device-verify",
        }
    }

    /// Config section holding the task's inputs.
    pub fn block(self) -> &'static str {
        match self {
            Task::Bands => "spectra",
            Task::Invariants => "topology",
            Task::PhaseDiagram => "phase_diagram",
            Task::Hinge => "hinge",
            Task::Transmit => "transport",
            Task::DeviceVerify => "device",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSettings {
    /// `0` uses every available core, `1` runs sequentially.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings { workers: 0, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSettings {
    #[serde(default = "default_format")]
    pub format: Format,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

fn default_format() -> Format {
    Format::Csv
}

impl Default for OutputSettings {
    fn default() -> Self {
        OutputSettings { format: Format::Csv, path: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectraTask {
    #[serde(default)]
    pub rule: LocalizationRule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyTask {
    /// Points per loop and per transverse direction.
    #[serde(default = "default_wilson_grid")]
    pub wilson_grid: usize,
}

fn default_wilson_grid() -> usize {
    60
}

impl Default for TopologyTask {
    fn default() -> Self {
        TopologyTask { wilson_grid: 60 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Span {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl Span {
    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.min];
        }
        (0..self.n).map(|i| self.min + (self.max - self.min) * i as f64 / (self.n - 1) as f64).collect()
    }

    fn validate(&self, field: &str) -> CliResult<()> {
        if !(self.min.is_finite() && self.max.is_finite() && self.min <= self.max) {
            return Err(CliError::config(field, "need finite min ≤ max"));
        }
        if self.n == 0 || self.n > 4001 {
            return Err(CliError::config(format!("{field}.n"), "must lie in 1..=4001"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseDiagramTask {
    #[serde(default = "default_span")]
    pub gamma1: Span,
    #[serde(default = "default_span")]
    pub gamma2: Span,
    /// Nested-loop grid for a numerical `Q_xy` at every diagram point; off when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wilson_grid: Option<usize>,
}

fn default_span() -> Span {
    Span { min: -2.0, max: 2.0, n: 41 }
}

impl Default for PhaseDiagramTask {
    fn default() -> Self {
        PhaseDiagramTask { gamma1: default_span(), gamma2: default_span(), wilson_grid: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HingeTask {
    #[serde(default = "all_corners")]
    pub corners: Vec<Corner>,
}

fn all_corners() -> Vec<Corner> {
    Corner::ALL.to_vec()
}

impl Default for HingeTask {
    fn default() -> Self {
        HingeTask { corners: all_corners() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderBlock {
    pub strength: f64,
    #[serde(default)]
    pub mode: DisorderMode,
    pub realizations: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportTask {
    #[serde(default)]
    pub energy: f64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    #[serde(default = "default_kz_star")]
    pub kz_star: f64,
    #[serde(default = "default_e_in")]
    pub e_in: f64,
    /// Centre of the excitation; `N_z/2` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub z_c: Option<usize>,
    #[serde(default = "all_corners")]
    pub corners: Vec<Corner>,
    #[serde(default = "default_faces")]
    pub faces: Vec<Face>,
    #[serde(default)]
    pub solver: SolverChoice,
    #[serde(default)]
    pub path: TransportPath,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disorder: Option<DisorderBlock>,
}

fn default_kappa() -> f64 {
    0.1
}

fn default_kz_star() -> f64 {
    PI
}

fn default_e_in() -> f64 {
    1.0
}

fn default_faces() -> Vec<Face> {
    vec![Face::Y0, Face::Yn]
}

impl Default for TransportTask {
    fn default() -> Self {
        TransportTask {
            energy: 0.0,
            kappa: default_kappa(),
            kz_star: PI,
            e_in: 1.0,
            z_c: None,
            corners: all_corners(),
            faces: default_faces(),
            solver: SolverChoice::default(),
            path: TransportPath::default(),
            disorder: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceTask {
    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,
    #[serde(default = "default_t_r")]
    pub t_r: f64,
    #[serde(default)]
    pub space: SyntheticSpace,
    /// Pinhole phase `δ₀` for the `l = 0` leakage check; skipped when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pinhole: Option<f64>,
    /// Bound on every per-channel absolute error, reported as pass/fail.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_bound: Option<f64>,
}

fn default_epsilons() -> Vec<f64> {
    vec![0.01]
}

fn default_t_r() -> f64 {
    1.0
}

impl Default for DeviceTask {
    fn default() -> Self {
        DeviceTask {
            epsilons: default_epsilons(),
            t_r: 1.0,
            space: SyntheticSpace::default(),
            pinhole: None,
            error_bound: None,
        }
    }
}

fn default_geometry() -> BoundarySpec {
    BoundarySpec::hinge_geometry(24, 24, 60)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelParams,
    #[serde(default = "default_geometry")]
    pub geometry: BoundarySpec,
    #[serde(default)]
    pub run: RunSettings,
    #[serde(default)]
    pub output: OutputSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectra: Option<SpectraTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologyTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_diagram: Option<PhaseDiagramTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hinge: Option<HingeTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transport: Option<TransportTask>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub device: Option<DeviceTask>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            model: ModelParams::default(),
            geometry: default_geometry(),
            run: RunSettings::default(),
            output: OutputSettings::default(),
            spectra: None,
            topology: None,
            phase_diagram: None,
            hinge: None,
            transport: None,
            device: None,
        }
    }
}

fn path_error<E: fmt::Display>(e: serde_path_to_error::Error<E>) -> CliError {
    let path = e.path().to_string();
    CliError::config(if path.is_empty() { ".".into() } else { path }, e.inner().to_string())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> CliResult<Self> {
        let de = toml::de::Deserializer::parse(text).map_err(|e| CliError::config(".", e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(path_error)
    }

    /// Accepts a bare config object or a result envelope carrying one under `config`.
    pub fn from_json(text: &str) -> CliResult<Self> {
        let mut v: serde_json::Value = serde_json::from_str(text).map_err(|e| CliError::config(".", e.to_string()))?;
        if v.get("artifact").is_some() {
            v = v
                .get_mut("config")
                .map(serde_json::Value::take)
                .ok_or_else(|| CliError::config("config", "envelope has no config"))?;
        }
        serde_path_to_error::deserialize(v).map_err(path_error)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display().to_string(), e))?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Self::from_json(&text),
            _ => Self::from_toml(&text),
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    fn blocks(&self) -> [(Task, bool); 6] {
        [
            (Task::Bands, self.spectra.is_some()),
            (Task::Invariants, self.topology.is_some()),
            (Task::PhaseDiagram, self.phase_diagram.is_some()),
            (Task::Hinge, self.hinge.is_some()),
            (Task::Transmit, self.transport.is_some()),
            (Task::DeviceVerify, self.device.is_some()),
        ]
    }

    /// Task whose block is present, if exactly one is.
    pub fn task(&self) -> Option<Task> {
        let active: Vec<Task> = self.blocks().iter().filter(|b| b.1).map(|b| b.0).collect();
        (active.len() == 1).then(|| active[0])
    }

    /// Inserts the default block for `task` when no block is present, then
    /// checks that `task`'s block is the only one.
    pub fn select(&mut self, task: Task) -> CliResult<()> {
        if self.blocks().iter().all(|b| !b.1) {
            match task {
                Task::Bands => self.spectra = Some(SpectraTask::default()),
                Task::Invariants => self.topology = Some(TopologyTask::default()),
                Task::PhaseDiagram => self.phase_diagram = Some(PhaseDiagramTask::default()),
                Task::Hinge => self.hinge = Some(HingeTask::default()),
                Task::Transmit => self.transport = Some(TransportTask::default()),
                Task::DeviceVerify => self.device = Some(DeviceTask::default()),
            }
        }
        let active: Vec<&str> = self.blocks().iter().filter(|b| b.1).map(|b| b.0.block()).collect();
        if active.len() != 1 {
            return Err(CliError::config(active.join(","), "exactly one task block may be present"));
        }
        if self.task() != Some(task) {
            return Err(CliError::config(
                active[0],
                format!("`{}` needs a [{}] block, found [{}]", task.name(), task.block(), active[0]),
            ));
        }
        Ok(())
    }

    fn kz_points(&self) -> CliResult<usize> {
        match self.geometry.z {
            Axis::Periodic(n) => Ok(n),
            Axis::Open(_) => Err(CliError::config("geometry.z", "must be periodic (it sets the k_z grid)")),
        }
    }

    /// Every check that does not need numerics; runs before any compute.
    pub fn validate(&self) -> CliResult<()> {
        self.model.validate()?;
        self.geometry.validate()?;
        let task = self.task().ok_or_else(|| CliError::config(".", "exactly one task block may be present"))?;
        self.kz_points()?;
        let open_xy = |what: &str| -> CliResult<(usize, usize)> {
            match (self.geometry.x, self.geometry.y) {
                (Axis::Open(nx), Axis::Open(ny)) => Ok((nx, ny)),
                _ => Err(CliError::config("geometry", format!("{what} needs open x and y axes"))),
            }
        };
        match task {
            Task::Bands => {
                let rule = &self.spectra.as_ref().expect("selected").rule;
                rule.validate()?;
                let mixed = self.geometry.x.is_periodic() != self.geometry.y.is_periodic();
                if mixed {
                    return Err(CliError::config("geometry", "x and y must be both open or both periodic"));
                }
            }
            Task::Invariants => {
                let t = self.topology.as_ref().expect("selected");
                if t.wilson_grid < 4 {
                    return Err(CliError::config("topology.wilson_grid", "must be at least 4"));
                }
                if !self.model.tilt.is_uniform() {
                    return Err(CliError::config("model.tilt", "invariants need a uniform tilt"));
                }
            }
            Task::PhaseDiagram => {
                let t = self.phase_diagram.as_ref().expect("selected");
                t.gamma1.validate("phase_diagram.gamma1")?;
                t.gamma2.validate("phase_diagram.gamma2")?;
                if matches!(t.wilson_grid, Some(n) if n < 4) {
                    return Err(CliError::config("phase_diagram.wilson_grid", "must be at least 4"));
                }
            }
            Task::Hinge => {
                if self.hinge.as_ref().expect("selected").corners.is_empty() {
                    return Err(CliError::config("hinge.corners", "must not be empty"));
                }
            }
            Task::Transmit => {
                open_xy("transmit")?;
                let t = self.transport.as_ref().expect("selected");
                if t.corners.is_empty() {
                    return Err(CliError::config("transport.corners", "must not be empty"));
                }
                for e in self.excitations()? {
                    e.validate(&self.transport_geometry()?)?;
                }
                if let Some(d) = self.disorder() {
                    d.validate()?;
                }
            }
            Task::DeviceVerify => {
                let d = self.device.as_ref().expect("selected");
                if d.epsilons.is_empty() {
                    return Err(CliError::config("device.epsilons", "must not be empty"));
                }
                for &epsilon in &d.epsilons {
                    self.synthesis(epsilon)?.validate()?;
                }
                if matches!(d.error_bound, Some(b) if !(b >= 0.0)) {
                    return Err(CliError::config("device.error_bound", "must be non-negative"));
                }
            }
        }
        Ok(())
    }

    pub fn kz_grid(&self) -> CliResult<Vec<f64>> {
        Ok(antichiral_core::lattice::momentum_grid(self.kz_points()?))
    }

    pub fn transport_geometry(&self) -> CliResult<antichiral_core::transport::TransportGeometry> {
        match (self.geometry.x, self.geometry.y) {
            (Axis::Open(nx), Axis::Open(ny)) => {
                Ok(antichiral_core::transport::TransportGeometry { nx, ny, nz: self.kz_points()? })
            }
            _ => Err(CliError::config("geometry", "transmit needs open x and y axes")),
        }
    }

    pub fn excitations(&self) -> CliResult<Vec<antichiral_core::transport::Excitation>> {
        let t = self.transport.as_ref().ok_or_else(|| CliError::config("transport", "missing"))?;
        let nz = self.kz_points()?;
        Ok(t.corners
            .iter()
            .map(|&corner| antichiral_core::transport::Excitation {
                corner,
                z_c: t.z_c.unwrap_or(nz / 2),
                kz_star: t.kz_star,
                e_in: t.e_in,
                energy: t.energy,
                kappa: t.kappa,
            })
            .collect())
    }

    pub fn disorder(&self) -> Option<antichiral_core::transport::DisorderSpec> {
        let d = self.transport.as_ref()?.disorder?;
        Some(antichiral_core::transport::DisorderSpec {
            strength: d.strength,
            mode: d.mode,
            realizations: d.realizations,
            seed: self.run.seed,
        })
    }

    pub fn synthesis(&self, epsilon: f64) -> CliResult<antichiral_core::photonic::SynthesisOptions> {
        let d = self.device.as_ref().ok_or_else(|| CliError::config("device", "missing"))?;
        Ok(antichiral_core::photonic::SynthesisOptions { epsilon, t_r: d.t_r, space: d.space, pinhole: d.pinhole })
    }
}
