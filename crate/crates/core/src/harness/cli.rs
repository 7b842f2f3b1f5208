//! Command-line front door and exit codes.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::error::Error;

use super::config::{ExperimentKind, RunConfig};
use super::experiments::run;

/// All checks passed.
pub const EXIT_OK: i32 = 0;
/// I/O or other unexpected failure.
pub const EXIT_OTHER: i32 = 1;
/// Invalid configuration or input file.
pub const EXIT_CONFIG: i32 = 2;
/// The mild solver or the majorant iteration failed to converge.
pub const EXIT_SOLVER: i32 = 3;
/// The run finished but a requested check failed.
pub const EXIT_CHECK_FAILED: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "nsmajorant", version, about = "Majorant certificates for truncated Navier-Stokes on the 3-torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct Common {
    /// TOML configuration file.
    pub config: PathBuf,
    /// Override a config value, e.g. `--set solver.nu=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Root for relative output directories (default: $NSMAJ_OUTPUT_ROOT or `.`).
    #[arg(long)]
    pub output_root: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the experiment named in the config (default: a single certified run).
    Run(Common),
    /// Majorant blow-up brackets over the sweep amplitudes.
    Sweep(Common),
    /// Sample the smoothing-kernel ratio over random pairs.
    ProbeKernel(Common),
    /// Calibrate the horizon constant from a sweep.
    CalibrateC(Common),
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidArgument(_)
        | Error::Format { .. }
        | Error::InputNotSolenoidal(_)
        | Error::InputNotReal(_)
        | Error::ModeOutOfBand { .. }
        | Error::TruncationMismatch { .. }
        | Error::Csv(_) => EXIT_CONFIG,
        Error::NoConvergence { .. } | Error::NonContraction { .. } => EXIT_SOLVER,
        _ => EXIT_OTHER,
    }
}

/// Parses arguments, runs, prints the summary and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (common, forced) = match &cli.command {
        Command::Run(c) => (c, None),
        Command::Sweep(c) => (c, Some(ExperimentKind::AmplitudeSweep)),
        Command::ProbeKernel(c) => (c, Some(ExperimentKind::KernelProbe)),
        Command::CalibrateC(c) => (c, Some(ExperimentKind::CalibrateC)),
    };
    let result = RunConfig::load(&common.config, &common.overrides).and_then(|mut cfg| {
        if let Some(k) = forced {
            cfg.experiment = k;
        }
        let base = common.config.parent().unwrap_or(Path::new("."));
        run(&cfg, base, common.output_root.as_deref())
    });
    match result {
        Ok(out) => {
            print!("{}", out.summary);
            println!("output: {}", out.dir.display());
            if out.passed {
                EXIT_OK
            } else {
                EXIT_CHECK_FAILED
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
