//! Scenario files: one TOML document describing geometry, kernel, grid, data and outputs.

use crate::CliError;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use translab::fixtures;
use translab::gcc::GccConfig;
use translab::geometry::GeometryDescriptor;
use translab::kernel::KernelSpec;
use translab::solver::{GridSpec, InitialData};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    GccCheck,
    Simulate,
    Observability,
    FullPipeline,
    Plots,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::GccCheck => "gcc-check",
            Task::Simulate => "simulate",
            Task::Observability => "observability",
            Task::FullPipeline => "full-pipeline",
            Task::Plots => "plots",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryFixture {
    Golden,
    Trapped,
    HalfShell,
    Undamped,
}

/// Either a named reference configuration or a full descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeometrySection {
    Fixture { fixture: GeometryFixture },
    Custom(GeometryDescriptor),
}

impl GeometrySection {
    pub fn descriptor(&self) -> GeometryDescriptor {
        match self {
            GeometrySection::Custom(d) => d.clone(),
            GeometrySection::Fixture { fixture } => match fixture {
                GeometryFixture::Golden => fixtures::golden(),
                GeometryFixture::Trapped => fixtures::trapped(),
                GeometryFixture::HalfShell => fixtures::annulus(fixtures::half_shell()),
                GeometryFixture::Undamped => fixtures::annulus(Default::default()),
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservabilitySection {
    /// Defaults to `4 diam / sqrt(k1)`.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "default_members")]
    pub members: usize,
    #[serde(default = "default_modes")]
    pub modes: usize,
    #[serde(default)]
    pub max_wavenumber: Option<f64>,
    /// Extra members appended after the random ones.
    #[serde(default)]
    pub extra: Vec<InitialData>,
    /// Grid for the ensemble runs; the main grid when absent.
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default = "default_probe_modes")]
    pub probe_modes: usize,
    #[serde(default)]
    pub probe_horizon: Option<f64>,
    #[serde(default = "default_eps_vis")]
    pub eps_vis: f64,
}

fn default_members() -> usize {
    8
}

fn default_modes() -> usize {
    64
}

fn default_probe_modes() -> usize {
    10
}

fn default_eps_vis() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub snapshot_times: Vec<f64>,
    pub prony_check: bool,
    /// Decay fit window; the second half of the run when absent.
    pub fit_window: Option<(f64, f64)>,
    /// Inward-normal rays exported by the control check.
    pub sample_rays: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: u32,
    #[serde(default)]
    pub task: Option<Task>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub geometry: Option<GeometrySection>,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub data: Option<InitialData>,
    #[serde(default)]
    pub gcc: GccConfig,
    #[serde(default)]
    pub observability: Option<ObservabilitySection>,
    #[serde(default)]
    pub output: OutputSection,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let sc: Scenario = toml::from_str(text).map_err(|e| CliError::ConfigParse(e.to_string()))?;
        if sc.version != SCHEMA_VERSION {
            return Err(CliError::ConfigParse(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                sc.version
            )));
        }
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
            path: path.to_owned(),
            source: e,
        })?;
        Self::parse(&text)
    }

    /// Sections each task cannot run without.
    pub fn validate(&self, task: Task) -> Result<(), CliError> {
        let need: &[(&str, bool)] = match task {
            Task::GccCheck => &[
                ("geometry", self.geometry.is_some()),
                ("kernel", self.kernel.is_some()),
            ],
            Task::Simulate => &[
                ("geometry", self.geometry.is_some()),
                ("kernel", self.kernel.is_some()),
                ("grid", self.grid.is_some()),
                ("data", self.data.is_some()),
            ],
            Task::Observability => &[
                ("geometry", self.geometry.is_some()),
                ("kernel", self.kernel.is_some()),
                ("observability", self.observability.is_some()),
                (
                    "grid",
                    self.grid.is_some()
                        || self.observability.as_ref().is_some_and(|o| o.grid.is_some()),
                ),
            ],
            Task::FullPipeline => &[
                ("geometry", self.geometry.is_some()),
                ("kernel", self.kernel.is_some()),
                ("grid", self.grid.is_some()),
                ("data", self.data.is_some()),
            ],
            Task::Plots => &[],
        };
        for (name, present) in need {
            if !present {
                return Err(CliError::ConfigParse(format!(
                    "task {} needs a [{name}] section",
                    task.name()
                )));
            }
        }
        Ok(())
    }
}
