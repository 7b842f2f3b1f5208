//! Experiment drivers. Each writes its artifacts into one run directory
//! and reports whether its checks passed.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::certification::{
    certify, decay_check, serialize_extended, singular_set_probe, ProbeConfig,
};
use crate::conv::{ConvolutionPath, Convolver};
use crate::error::{Error, Result};
use crate::majorant::{blowup_bracket, build_majorant, solve_majorant};
use crate::mild::{initial_layer_check, solve_mild};
use crate::operators::{apply_multiplier, Multiplier};

use super::config::{ExperimentKind, RunConfig};
use super::initial::random_unit_h1_scalar;
use super::io::{write_json, write_majorant, write_text, write_trajectory, write_vector_csv};

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub kind: ExperimentKind,
    pub passed: bool,
    pub dir: PathBuf,
    pub summary: String,
}

/// Runs the experiment named in `cfg`. `base` resolves relative input
/// paths; `root` overrides the output root.
pub fn run(cfg: &RunConfig, base: &Path, root: Option<&Path>) -> Result<Outcome> {
    cfg.validate()?;
    let dir = cfg.output_dir(root);
    fs::create_dir_all(&dir)?;
    let mut echo = cfg.clone();
    echo.output.dir = PathBuf::from(".");
    write_text(&dir.join("config.toml"), &echo.to_toml_string()?)?;
    let (passed, summary) = match cfg.experiment {
        ExperimentKind::Single => single(cfg, base, &dir)?,
        ExperimentKind::AmplitudeSweep => {
            let s = amplitude_sweep(cfg, base, &dir)?;
            (s.monotone, s.summary())
        }
        ExperimentKind::CalibrateC => calibrate_c(cfg, base, &dir)?,
        ExperimentKind::KernelProbe => {
            let k = kernel_probe(cfg)?;
            write_json(&dir.join("kernel_probe.json"), &k)?;
            (k.passed, k.summary())
        }
    };
    write_text(&dir.join("summary.txt"), &summary)?;
    Ok(Outcome {
        kind: cfg.experiment,
        passed,
        dir,
        summary,
    })
}

#[derive(Debug, Serialize)]
struct RunManifest {
    initial_h1_norm: f64,
    majorant_initial_h1_norm: f64,
    majorant_bound: f64,
    majorant_iterations: usize,
    majorant_sup_norm: f64,
    picard_iterations: usize,
    checkpoints: usize,
    initial_layer: Option<f64>,
    passed: bool,
}

fn single(cfg: &RunConfig, base: &Path, dir: &Path) -> Result<(bool, String)> {
    let s = &cfg.solver;
    let v0 = cfg.initial.build(s.truncation, base)?;
    write_vector_csv(fs::File::create(dir.join("initial.csv"))?, &v0)?;
    let grid = s.time_grid()?;
    let maj0 = build_majorant(&v0);
    let bound = cfg.majorant.bound_factor * (1.0 + maj0.h1_norm());
    let majorant = solve_majorant(&maj0, &grid, &cfg.majorant_config(Some(bound)))?;
    let velocity = solve_mild(&v0, s)?;
    let mut report = certify(&velocity, &majorant, cfg.certification.slack)?;
    let decay = decay_check(&velocity)?;
    let last = majorant.frames.len() - 1;
    report.global_small_data =
        decay.ok && majorant.frames[last].h1_norm() <= majorant.frames[0].h1_norm();
    let passed =
        report.majorant_certified && (!cfg.certification.require_decay || report.decay_certified);

    write_trajectory(&dir.join("trajectory"), &velocity, cfg.output.checkpoint_stride)?;
    if cfg.output.write_majorant {
        write_majorant(&dir.join("majorant.csv"), &majorant, cfg.output.checkpoint_stride)?;
    }
    write_json(&dir.join("certification.json"), &report)?;
    let summary = report.summary();
    write_text(&dir.join("certification.txt"), &summary)?;
    let initial_layer = match initial_layer_check(&velocity, &v0) {
        Ok(d) => Some(d),
        Err(Error::InsufficientCheckpoints { .. }) => None,
        Err(e) => return Err(e),
    };
    write_json(
        &dir.join("run.json"),
        &RunManifest {
            initial_h1_norm: v0.h1_norm(),
            majorant_initial_h1_norm: maj0.h1_norm(),
            majorant_bound: bound,
            majorant_iterations: majorant.iterations,
            majorant_sup_norm: majorant.sup_norm(),
            picard_iterations: velocity.picard_iterations,
            checkpoints: velocity.frames.len(),
            initial_layer,
            passed,
        },
    )?;
    Ok((passed, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub amplitude: f64,
    pub initial_h1_norm: f64,
    #[serde(rename = "T_lo")]
    pub t_lo: f64,
    /// `+inf` when the majorant survived up to `t_max`.
    #[serde(rename = "T_hi", serialize_with = "serialize_extended")]
    pub t_hi: f64,
    pub solves: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub rows: Vec<SweepRow>,
    /// `T_lo` is non-increasing in the amplitude.
    pub monotone: bool,
}

impl Sweep {
    pub fn summary(&self) -> String {
        let mut s = String::from("amplitude  |v0|_H1  T_lo  T_hi\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{}  {:.6e}  {:.6e}  {}\n",
                r.amplitude,
                r.initial_h1_norm,
                r.t_lo,
                if r.t_hi.is_infinite() { "+inf".to_string() } else { format!("{:.6e}", r.t_hi) }
            ));
        }
        s.push_str(&format!("monotone: {}\n", if self.monotone { "yes" } else { "no" }));
        s
    }
}

/// Majorant blow-up brackets for every sweep amplitude; writes `sweep.json`
/// and, when requested, `singular_set.json`.
pub fn amplitude_sweep(cfg: &RunConfig, base: &Path, dir: &Path) -> Result<Sweep> {
    let n = cfg.solver.truncation;
    let sw = &cfg.sweep;
    let mut rows = Vec::with_capacity(sw.amplitudes.len());
    for &a in &sw.amplitudes {
        let v0 = cfg.initial.with_amplitude(a)?.build(n, base)?;
        let maj0 = build_majorant(&v0);
        let bound = cfg.majorant.bound_factor * (1.0 + maj0.h1_norm());
        let b = blowup_bracket(&maj0, sw.t_max, bound, &cfg.majorant_config(None), &sw.bracket)?;
        rows.push(SweepRow {
            amplitude: a,
            initial_h1_norm: v0.h1_norm(),
            t_lo: b.t_lo,
            t_hi: b.t_hi.unwrap_or(f64::INFINITY),
            solves: b.solves,
        });
    }
    let monotone = rows.windows(2).all(|w| w[0].t_lo >= w[1].t_lo);
    write_json(&dir.join("sweep.json"), &rows)?;
    if sw.solver_horizon {
        let probe = ProbeConfig {
            solver: cfg.solver.clone(),
            majorant: cfg.majorant_config(None),
            bracket: sw.bracket,
            t_max: sw.t_max,
            bound_factor: cfg.majorant.bound_factor,
            solver_rel_width: sw.solver_rel_width,
        };
        let table = singular_set_probe(
            &sw.amplitudes,
            |a| cfg.initial.with_amplitude(a)?.build(n, base),
            &probe,
        )?;
        write_json(&dir.join("singular_set.json"), &table)?;
    }
    Ok(Sweep { rows, monotone })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationRow {
    pub amplitude: f64,
    pub initial_h1_norm: f64,
    #[serde(rename = "T_lo")]
    pub t_lo: f64,
    /// `c_cal / (1 + A)^16`.
    pub predicted: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub c_cal: f64,
    pub monotone: bool,
    pub rows: Vec<CalibrationRow>,
    pub passed: bool,
}

/// `c_cal = min_A T_lo(A) (1 + ||v0_A||)^16`, then checks
/// `c_cal / (1 + A)^16 <= T_lo(A)` for every amplitude.
pub fn calibrate(sweep: &Sweep) -> Calibration {
    let c_cal = sweep
        .rows
        .iter()
        .map(|r| r.t_lo * (1.0 + r.initial_h1_norm).powi(16))
        .fold(f64::INFINITY, f64::min);
    let rows: Vec<_> = sweep
        .rows
        .iter()
        .map(|r| {
            let predicted = c_cal / (1.0 + r.amplitude).powi(16);
            CalibrationRow {
                amplitude: r.amplitude,
                initial_h1_norm: r.initial_h1_norm,
                t_lo: r.t_lo,
                predicted,
                ok: predicted <= r.t_lo,
            }
        })
        .collect();
    let passed = sweep.monotone && rows.iter().all(|r| r.ok);
    Calibration {
        c_cal,
        monotone: sweep.monotone,
        rows,
        passed,
    }
}

fn calibrate_c(cfg: &RunConfig, base: &Path, dir: &Path) -> Result<(bool, String)> {
    let sweep = amplitude_sweep(cfg, base, dir)?;
    let cal = calibrate(&sweep);
    write_json(&dir.join("calibration.json"), &cal)?;
    let mut s = sweep.summary();
    s.push_str(&format!("c_cal = {:.6e}\n", cal.c_cal));
    for r in &cal.rows {
        s.push_str(&format!(
            "A = {}: c_cal/(1+A)^16 = {:.6e} <= T_lo = {:.6e}: {}\n",
            r.amplitude,
            r.predicted,
            r.t_lo,
            if r.ok { "yes" } else { "no" }
        ));
    }
    Ok((cal.passed, s))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelWindow {
    /// `t^{7/8}` or `e^{t/2}`.
    pub weight: String,
    pub times: Vec<f64>,
    /// Max over pairs of `||H^{nu t} D(u w)|| / (||u|| ||w||)`.
    pub ratio: Vec<f64>,
    pub weighted: Vec<f64>,
    pub max: f64,
    pub median: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelProbe {
    pub truncation: usize,
    pub pairs: usize,
    pub seed: u64,
    pub ratio_bound: f64,
    pub short: KernelWindow,
    pub long: KernelWindow,
    pub passed: bool,
}

impl KernelProbe {
    pub fn summary(&self) -> String {
        let line = |w: &KernelWindow| {
            format!(
                "ratio * {}: max {:.6e}, median {:.6e}, max/median {:.4} (bound {}): {}\n",
                w.weight,
                w.max,
                w.median,
                w.max / w.median,
                self.ratio_bound,
                if w.passed { "pass" } else { "fail" }
            )
        };
        format!("{}{}", line(&self.short), line(&self.long))
    }
}

fn log_spaced(a: f64, b: f64, count: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    (0..count)
        .map(|i| (la + (lb - la) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Samples the smoothing ratio over seeded unit-`H^1` pairs and checks that
/// the weighted maximum stays within `ratio_bound` times its median.
pub fn kernel_probe(cfg: &RunConfig) -> Result<KernelProbe> {
    let k = &cfg.kernel;
    let conv = Convolver::new(k.truncation, ConvolutionPath::Transform);
    let mut rng = ChaCha8Rng::seed_from_u64(k.seed);
    let short_t = log_spaced(k.t_min, k.t_split, k.times_per_window);
    let long_t = log_spaced(k.t_split, k.t_max, k.times_per_window);
    let mut short_r = vec![0.0f64; short_t.len()];
    let mut long_r = vec![0.0f64; long_t.len()];
    for _ in 0..k.pairs {
        let u = random_unit_h1_scalar(&mut rng, k.truncation)?;
        let w = random_unit_h1_scalar(&mut rng, k.truncation)?;
        let norm = u.h1_norm() * w.h1_norm();
        let dp = apply_multiplier(Multiplier::Degree, &conv.product(&u, &w)?)?;
        for (times, out) in [(&short_t, &mut short_r), (&long_t, &mut long_r)] {
            for (t, r) in times.iter().zip(out.iter_mut()) {
                let g = apply_multiplier(Multiplier::SemigroupH(k.nu * t), &dp)?;
                *r = r.max(g.h1_norm() / norm);
            }
        }
    }
    let window = |weight: &str, times: Vec<f64>, ratio: Vec<f64>, f: &dyn Fn(f64) -> f64| {
        let weighted: Vec<f64> = times.iter().zip(&ratio).map(|(t, r)| r * f(*t)).collect();
        let max = weighted.iter().copied().fold(0.0, f64::max);
        let med = median(&weighted);
        KernelWindow {
            weight: weight.into(),
            times,
            ratio,
            max,
            median: med,
            passed: max <= k.ratio_bound * med,
            weighted,
        }
    };
    let short = window("t^(7/8)", short_t, short_r, &|t| t.powf(7.0 / 8.0));
    let long = window("e^(t/2)", long_t, long_r, &|t| (t / 2.0).exp());
    let passed = short.passed && long.passed;
    Ok(KernelProbe {
        truncation: k.truncation,
        pairs: k.pairs,
        seed: k.seed,
        ratio_bound: k.ratio_bound,
        short,
        long,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{InitialCondition, KernelProbeConfig};
    use crate::harness::io::read_tree;

    fn small(kind: ExperimentKind) -> RunConfig {
        let mut cfg = RunConfig {
            experiment: kind,
            ..RunConfig::default()
        };
        cfg.solver.truncation = 2;
        cfg.solver.horizon = 0.2;
        cfg.solver.grid.max_step_fraction = 0.05;
        cfg.sweep.amplitudes = vec![1.0, 4.0];
        cfg.sweep.t_max = 1.0;
        cfg.sweep.bracket.grid.max_step_fraction = 0.05;
        cfg.sweep.bracket.rel_width = 0.05;
        cfg.kernel = KernelProbeConfig { truncation: 3, pairs: 5, ..KernelProbeConfig::default() };
        cfg
    }

    #[test]
    fn zero_data_run_is_certified() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small(ExperimentKind::Single);
        cfg.initial = InitialCondition::TaylorGreen { amplitude: 0.0 };
        let out = run(&cfg, dir.path(), Some(dir.path())).unwrap();
        assert!(out.passed);
        for f in ["certification.json", "certification.txt", "majorant.csv", "run.json", "trajectory/manifest.json"] {
            assert!(out.dir.join(f).is_file(), "{f}");
        }
    }

    #[test]
    fn reruns_are_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let cfg = small(ExperimentKind::Single);
        run(&cfg, a.path(), Some(a.path())).unwrap();
        run(&cfg, b.path(), Some(b.path())).unwrap();
        assert_eq!(read_tree(a.path()).unwrap(), read_tree(b.path()).unwrap());
    }

    #[test]
    fn sweep_and_calibration() {
        let dir = tempfile::tempdir().unwrap();
        let out = run(&small(ExperimentKind::CalibrateC), dir.path(), Some(dir.path())).unwrap();
        assert!(out.passed, "{}", out.summary);
        let text = fs::read_to_string(out.dir.join("sweep.json")).unwrap();
        assert!(text.contains("\"T_lo\""));
    }

    #[test]
    fn calibration_constant_is_tight_somewhere() {
        let sweep = Sweep {
            rows: vec![
                SweepRow { amplitude: 1.0, initial_h1_norm: 0.5, t_lo: 0.3, t_hi: 0.31, solves: 1 },
                SweepRow { amplitude: 2.0, initial_h1_norm: 1.0, t_lo: 0.1, t_hi: 0.11, solves: 1 },
            ],
            monotone: true,
        };
        let cal = calibrate(&sweep);
        let c0 = 0.3 * 1.5f64.powi(16);
        let c1 = 0.1 * 2f64.powi(16);
        assert_eq!(cal.c_cal, c0.min(c1));
        assert!(cal.passed);
    }

    #[test]
    fn kernel_probe_small() {
        let k = kernel_probe(&small(ExperimentKind::KernelProbe)).unwrap();
        assert_eq!(k.short.times.len(), 20);
        assert!((k.short.times[0] - 1e-4).abs() < 1e-18);
        assert!((k.long.times[19] - 10.0).abs() < 1e-12);
        assert!(k.short.ratio.iter().all(|r| r.is_finite() && *r > 0.0));
        // the smoothing ratio decreases in t
        assert!(k.short.ratio.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
