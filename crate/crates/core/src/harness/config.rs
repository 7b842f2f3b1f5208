//! Run configuration: a TOML file plus `section.key=value` overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::conv::ConvolutionPath;
use crate::error::{Error, Result};
use crate::field::SpectralVectorField;
use crate::grid::GridSpec;
use crate::majorant::{BracketConfig, MajorantConfig, DEFAULT_A};
use crate::mild::SolverConfig;

use super::initial::{random_solenoidal, taylor_green};

/// Environment variable naming the root directory for relative output paths.
pub const OUTPUT_ROOT_ENV: &str = "NSMAJ_OUTPUT_ROOT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    #[default]
    Single,
    AmplitudeSweep,
    KernelProbe,
    CalibrateC,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    TaylorGreen { amplitude: f64 },
    RandomSolenoidal { seed: u64, target_h1_norm: f64 },
    /// Vector CSV with columns `component,k1,k2,k3,re,im`.
    File { path: PathBuf },
}

impl Default for InitialCondition {
    fn default() -> Self {
        Self::TaylorGreen { amplitude: 0.1 }
    }
}

impl InitialCondition {
    /// Builds the field at truncation `n`. Relative file paths resolve
    /// against `base`.
    pub fn build(&self, n: usize, base: &Path) -> Result<SpectralVectorField> {
        match self {
            Self::TaylorGreen { amplitude } => taylor_green(*amplitude, n),
            Self::RandomSolenoidal { seed, target_h1_norm } => {
                random_solenoidal(*seed, *target_h1_norm, n)
            }
            Self::File { path } => {
                let p = if path.is_relative() { base.join(path) } else { path.clone() };
                let (v, _mean) = super::io::read_vector_csv(&p, n)?;
                Ok(v)
            }
        }
    }

    /// The same family with its size parameter replaced by `amplitude`.
    pub fn with_amplitude(&self, amplitude: f64) -> Result<Self> {
        match self {
            Self::TaylorGreen { .. } => Ok(Self::TaylorGreen { amplitude }),
            Self::RandomSolenoidal { seed, .. } => Ok(Self::RandomSolenoidal {
                seed: *seed,
                target_h1_norm: amplitude,
            }),
            Self::File { .. } => Err(Error::Config(
                "amplitude sweeps need a taylor_green or random_solenoidal initial condition".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Run directory; relative paths resolve against the output root.
    pub dir: PathBuf,
    /// Write every `stride`-th checkpoint (the last one is always written).
    pub checkpoint_stride: usize,
    pub write_majorant: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("run"),
            checkpoint_stride: 10,
            write_majorant: true,
        }
    }
}

/// Majorant parameters. `nu` always comes from the solver section.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MajorantSettings {
    pub a: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub growth_patience: usize,
    pub convolution: ConvolutionPath,
    /// Blow-up threshold as a multiple of `1 + ||V0||_{H^1}`.
    pub bound_factor: f64,
}

impl Default for MajorantSettings {
    fn default() -> Self {
        let m = MajorantConfig::default();
        Self {
            a: DEFAULT_A,
            tol: m.tol,
            max_iter: m.max_iter,
            growth_patience: m.growth_patience,
            convolution: m.convolution,
            bound_factor: 1e3,
        }
    }
}

impl MajorantSettings {
    pub fn to_config(&self, nu: f64, bound: Option<f64>) -> MajorantConfig {
        MajorantConfig {
            nu,
            a: self.a,
            tol: self.tol,
            max_iter: self.max_iter,
            bound,
            growth_patience: self.growth_patience,
            convolution: self.convolution,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificationConfig {
    pub slack: f64,
    /// Exit nonzero when the decay check fails.
    pub require_decay: bool,
}

impl Default for CertificationConfig {
    fn default() -> Self {
        Self {
            slack: 1.0 + 1e-6,
            require_decay: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub amplitudes: Vec<f64>,
    pub t_max: f64,
    pub bracket: BracketConfig,
    /// Also bisect the mild-solver horizon for every amplitude.
    pub solver_horizon: bool,
    pub solver_rel_width: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            amplitudes: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            t_max: 5.0,
            bracket: BracketConfig::default(),
            solver_horizon: false,
            solver_rel_width: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelProbeConfig {
    pub truncation: usize,
    pub pairs: usize,
    pub seed: u64,
    pub nu: f64,
    /// Log-spaced times per window.
    pub times_per_window: usize,
    pub t_min: f64,
    pub t_split: f64,
    pub t_max: f64,
    /// Allowed `max / median` of the weighted ratio.
    pub ratio_bound: f64,
}

impl Default for KernelProbeConfig {
    fn default() -> Self {
        Self {
            truncation: 8,
            pairs: 100,
            seed: 0,
            nu: 1.0,
            times_per_window: 20,
            t_min: 1e-4,
            t_split: 1.0,
            t_max: 10.0,
            ratio_bound: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: ExperimentKind,
    pub solver: SolverConfig,
    pub initial: InitialCondition,
    pub output: OutputConfig,
    pub majorant: MajorantSettings,
    pub certification: CertificationConfig,
    pub sweep: SweepConfig,
    pub kernel: KernelProbeConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = table
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        match &self.initial {
            InitialCondition::TaylorGreen { amplitude } if !(*amplitude >= 0.0) => {
                return Err(Error::Config(format!("amplitude must be >= 0, got {amplitude}")));
            }
            InitialCondition::RandomSolenoidal { target_h1_norm, .. } if !(*target_h1_norm >= 0.0) => {
                return Err(Error::Config("target_h1_norm must be >= 0".into()));
            }
            _ => {}
        }
        if self.output.checkpoint_stride == 0 {
            return Err(Error::Config("checkpoint_stride must be >= 1".into()));
        }
        if !(self.certification.slack >= 1.0) {
            return Err(Error::Config("slack must be >= 1".into()));
        }
        if !(self.majorant.bound_factor > 1.0) {
            return Err(Error::Config("bound_factor must exceed 1".into()));
        }
        if self.experiment == ExperimentKind::AmplitudeSweep || self.experiment == ExperimentKind::CalibrateC {
            let a = &self.sweep.amplitudes;
            if a.is_empty() || a.iter().any(|x| !(*x > 0.0)) || a.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Config("sweep amplitudes must be positive and ascending".into()));
            }
            if !(self.sweep.t_max > 0.0) {
                return Err(Error::Config("sweep t_max must be positive".into()));
            }
        }
        let k = &self.kernel;
        if self.experiment == ExperimentKind::KernelProbe
            && (k.pairs == 0
                || k.times_per_window < 2
                || k.truncation == 0
                || !(0.0 < k.t_min && k.t_min < k.t_split && k.t_split < k.t_max))
        {
            return Err(Error::Config("invalid kernel probe settings".into()));
        }
        Ok(())
    }

    /// `root / output.dir`, with `root` from [`OUTPUT_ROOT_ENV`] or `.`.
    pub fn output_dir(&self, root: Option<&Path>) -> PathBuf {
        if self.output.dir.is_absolute() {
            return self.output.dir.clone();
        }
        let root = root
            .map(Path::to_path_buf)
            .or_else(|| std::env::var_os(OUTPUT_ROOT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        root.join(&self.output.dir)
    }

    pub fn majorant_config(&self, bound: Option<f64>) -> MajorantConfig {
        self.majorant.to_config(self.solver.nu, bound)
    }

    pub fn grid_spec(&self) -> GridSpec {
        self.solver.grid
    }
}

/// Sets `a.b.c = value` in `table`. The value is parsed as a TOML value and
/// falls back to a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let keys: Vec<&str> = path.trim().split('.').map(str::trim).collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(Error::Config(format!("bad override key `{path}`")));
    }
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let (last, parents) = keys.split_last().unwrap();
    let mut cur = table;
    for k in parents {
        let entry = cur
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key `{k}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}
