//! Velocity by Picard iteration on the mild (Duhamel) formulation
//!
//! ```text
//! v^k(t) = S^{nu t} v0^k + int_0^t S^{nu (t - s)} A^k_l d_j (v^j v^l)(s) ds
//! ```
//!
//! iterated globally on the whole time grid, plus a classical RK4 Galerkin
//! integrator that serves as an independent cross-check.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conv::{ConvolutionPath, Convolver};
use crate::error::{Error, Result};
use crate::field::{SpectralScalarField, SpectralVectorField};
use crate::grid::{GridSpec, TimeGrid};
use crate::operators::{nonlinear_term_with, pressure_with, ExpQuadrature};

/// Divergence residual above which initial data are rejected, relative to
/// `max(1, ||v0||_{H^1})`.
pub const INPUT_DIVERGENCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub truncation: usize,
    pub nu: f64,
    pub horizon: f64,
    pub grid: GridSpec,
    pub picard_tol: f64,
    pub max_iter: usize,
    pub convolution: ConvolutionPath,
    pub with_pressure: bool,
    /// Consecutive growing increments tolerated before giving up early.
    pub growth_patience: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            truncation: 8,
            nu: 1.0,
            horizon: 0.5,
            grid: GridSpec::default(),
            picard_tol: 1e-11,
            max_iter: 60,
            convolution: ConvolutionPath::Transform,
            with_pressure: false,
            growth_patience: 6,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.truncation < 1 {
            return Err(Error::Config("truncation must be >= 1".into()));
        }
        if !(self.nu > 0.0) {
            return Err(Error::Config(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::Config(format!("horizon must be positive, got {}", self.horizon)));
        }
        if !(self.picard_tol > 0.0) {
            return Err(Error::Config("picard_tol must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::Config("max_iter must be >= 1".into()));
        }
        Ok(())
    }

    pub fn time_grid(&self) -> Result<TimeGrid> {
        TimeGrid::build(self.horizon, &self.grid)
    }
}

#[derive(Debug, Clone)]
pub struct VelocityTrajectory {
    pub grid: TimeGrid,
    pub frames: Vec<SpectralVectorField>,
    pub nu: f64,
    pub pressure_frames: Option<Vec<SpectralScalarField>>,
    pub picard_iterations: usize,
    pub converged: bool,
    /// Sup-over-grid `H^1` increments, one per Picard step (empty for the
    /// RK4 oracle).
    pub increments: Vec<f64>,
}

impl VelocityTrajectory {
    pub fn truncation(&self) -> usize {
        self.frames[0].truncation()
    }

    /// `sup_t ||self(t) - other(t)||_{H^1}` over a shared grid.
    pub fn sup_distance(&self, other: &VelocityTrajectory) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mut worst = 0.0f64;
        for (a, b) in self.frames.iter().zip(&other.frames) {
            worst = worst.max(a.hs_distance(b, 1.0)?);
        }
        Ok(worst)
    }

    pub fn h1_norms(&self) -> Vec<f64> {
        self.frames.iter().map(|f| f.h1_norm()).collect()
    }
}

/// Validates and normalises initial data: rejects divergence or broken
/// conjugate symmetry, then makes the symmetry exact.
pub fn prepare_initial(vhat: &SpectralVectorField, n: usize) -> Result<SpectralVectorField> {
    if vhat.truncation() != n {
        return Err(Error::TruncationMismatch {
            left: n,
            right: vhat.truncation(),
        });
    }
    let scale = vhat.h1_norm().max(1.0);
    let div = vhat.divergence_residual();
    if div > INPUT_DIVERGENCE_TOL * scale {
        return Err(Error::InputNotSolenoidal(div));
    }
    let max = vhat
        .components
        .iter()
        .map(|c| c.max_abs())
        .fold(0.0, f64::max)
        .max(1.0);
    let defect = vhat.reality_defect();
    if defect > 1e-12 * max {
        return Err(Error::InputNotReal(defect));
    }
    let mut v = vhat.enforce_reality();
    v.solenoidal_checked = true;
    Ok(v)
}

fn heat_flow(v: &SpectralVectorField, nu: f64, t: f64) -> SpectralVectorField {
    let mut out = v.map_components(|_, c| {
        c.map_modes(true, |k| Complex64::new((-nu * k.norm_e_sq() as f64 * t).exp(), 0.0))
    });
    out.solenoidal_checked = v.solenoidal_checked;
    out
}

fn sup_increment(a: &[SpectralVectorField], b: &[SpectralVectorField]) -> Result<f64> {
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        worst = worst.max(x.hs_distance(y, 1.0)?);
    }
    Ok(worst)
}

fn with_pressure(
    conv: &Convolver,
    frames: &[SpectralVectorField],
    wanted: bool,
) -> Result<Option<Vec<SpectralScalarField>>> {
    if !wanted {
        return Ok(None);
    }
    frames
        .iter()
        .map(|v| pressure_with(conv, v))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// Global-in-interval Picard iteration for the mild formulation.
pub fn solve_mild(vhat: &SpectralVectorField, cfg: &SolverConfig) -> Result<VelocityTrajectory> {
    cfg.validate()?;
    let v0 = prepare_initial(vhat, cfg.truncation)?;
    let grid = cfg.time_grid()?;
    solve_mild_on(&v0, cfg, &grid)
}

/// As [`solve_mild`] on an explicit grid; `v0` must already be prepared.
pub fn solve_mild_on(
    v0: &SpectralVectorField,
    cfg: &SolverConfig,
    grid: &TimeGrid,
) -> Result<VelocityTrajectory> {
    let n = cfg.truncation;
    let conv = Convolver::new(n, cfg.convolution);
    let quad = ExpQuadrature::heat(grid, n, cfg.nu);
    let linear: Vec<SpectralVectorField> =
        grid.times().iter().map(|&t| heat_flow(v0, cfg.nu, t)).collect();
    let mut frames = linear.clone();
    let mut increments = Vec::new();
    let mut growing = 0usize;
    for it in 1..=cfg.max_iter {
        let forcing = frames
            .iter()
            .map(|v| nonlinear_term_with(&conv, v))
            .collect::<Result<Vec<_>>>()?;
        let mut next = linear.clone();
        for j in 0..3 {
            let samples: Vec<SpectralScalarField> =
                forcing.iter().map(|f| f.components[j].clone()).collect();
            let integral = quad.accumulate(&samples)?;
            for (dst, int) in next.iter_mut().zip(integral) {
                dst.components[j] = &dst.components[j] + &int;
            }
        }
        for f in next.iter_mut() {
            f.solenoidal_checked = true;
        }
        let inc = sup_increment(&next, &frames)?;
        if let Some(&prev) = increments.last() {
            growing = if inc > prev { growing + 1 } else { 0 };
        }
        increments.push(inc);
        frames = next;
        if !inc.is_finite() || growing >= cfg.growth_patience {
            break;
        }
        if inc <= cfg.picard_tol {
            let pressure_frames = with_pressure(&conv, &frames, cfg.with_pressure)?;
            return Ok(VelocityTrajectory {
                grid: grid.clone(),
                frames,
                nu: cfg.nu,
                pressure_frames,
                picard_iterations: it,
                converged: true,
                increments,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: increments.len(),
        last_increment: increments.last().copied().unwrap_or(f64::NAN),
        history: increments,
    })
}

/// RK4 stability bound on `lambda h` along the negative real axis.
const RK4_STABILITY: f64 = 2.785;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OracleConfig {
    /// Substep cap; defaults to `min(1e-3, 0.1 / (nu N^2))`.
    pub max_step: Option<f64>,
}

/// Classical RK4 on the truncated coefficient ODE
/// `dv/dt = N(v) - nu |k|^2 v`, stepping exactly onto every grid node.
pub fn galerkin_ode_oracle(
    vhat: &SpectralVectorField,
    cfg: &SolverConfig,
    oracle: &OracleConfig,
) -> Result<VelocityTrajectory> {
    cfg.validate()?;
    let v0 = prepare_initial(vhat, cfg.truncation)?;
    let grid = cfg.time_grid()?;
    galerkin_ode_oracle_on(&v0, cfg, oracle, &grid)
}

pub fn galerkin_ode_oracle_on(
    v0: &SpectralVectorField,
    cfg: &SolverConfig,
    oracle: &OracleConfig,
    grid: &TimeGrid,
) -> Result<VelocityTrajectory> {
    let n = cfg.truncation;
    let nu = cfg.nu;
    let default_step = 1e-3f64.min(0.1 / (nu * (n * n) as f64));
    let h_max = oracle.max_step.unwrap_or(default_step);
    let stiffest = nu * (3 * n * n) as f64;
    if !(h_max > 0.0) || stiffest * h_max > RK4_STABILITY {
        return Err(Error::StepStability {
            step: h_max,
            limit: RK4_STABILITY / stiffest,
        });
    }
    let conv = Convolver::new(n, cfg.convolution);
    let rhs = |v: &SpectralVectorField| -> Result<SpectralVectorField> {
        let nl = nonlinear_term_with(&conv, v)?;
        let mut out = nl;
        for j in 0..3 {
            let visc = v.components[j]
                .map_modes(true, |k| Complex64::new(-nu * k.norm_e_sq() as f64, 0.0));
            out.components[j] = &out.components[j] + &visc;
        }
        Ok(out)
    };
    let axpy = |v: &SpectralVectorField, s: f64, d: &SpectralVectorField| {
        let mut out = v.clone();
        for j in 0..3 {
            out.components[j].axpy(s, &d.components[j]);
        }
        out
    };
    let mut frames = vec![v0.clone()];
    let mut v = v0.clone();
    for w in grid.times().windows(2) {
        let span = w[1] - w[0];
        let steps = (span / h_max).ceil().max(1.0) as usize;
        let h = span / steps as f64;
        for _ in 0..steps {
            let k1 = rhs(&v)?;
            let k2 = rhs(&axpy(&v, h / 2.0, &k1))?;
            let k3 = rhs(&axpy(&v, h / 2.0, &k2))?;
            let k4 = rhs(&axpy(&v, h, &k3))?;
            let mut next = axpy(&v, h / 6.0, &k1);
            next = axpy(&next, h / 3.0, &k2);
            next = axpy(&next, h / 3.0, &k3);
            next = axpy(&next, h / 6.0, &k4);
            v = next;
        }
        let mut frame = v.clone();
        frame.solenoidal_checked = true;
        frames.push(frame);
    }
    let pressure_frames = with_pressure(&conv, &frames, cfg.with_pressure)?;
    Ok(VelocityTrajectory {
        grid: grid.clone(),
        frames,
        nu,
        pressure_frames,
        picard_iterations: 0,
        converged: true,
        increments: Vec::new(),
    })
}

/// `||v0 - v(t)||_{H^1}` at the first `count` positive checkpoints, all
/// below `T / 100`.
pub fn initial_layer_profile(
    traj: &VelocityTrajectory,
    vhat: &SpectralVectorField,
    count: usize,
) -> Result<Vec<(f64, f64)>> {
    let below = traj.grid.horizon() / 100.0;
    let early: Vec<usize> = traj
        .grid
        .times()
        .iter()
        .enumerate()
        .filter(|(_, &t)| t > 0.0 && t < below)
        .map(|(i, _)| i)
        .take(count)
        .collect();
    if early.len() < count.max(3) {
        return Err(Error::InsufficientCheckpoints {
            needed: count.max(3),
            found: early.len(),
            below,
        });
    }
    early
        .into_iter()
        .map(|i| Ok((traj.grid.times()[i], vhat.hs_distance(&traj.frames[i], 1.0)?)))
        .collect()
}

/// `||v0 - v(t1)||_{H^1}` at the smallest positive checkpoint.
pub fn initial_layer_check(traj: &VelocityTrajectory, vhat: &SpectralVectorField) -> Result<f64> {
    Ok(initial_layer_profile(traj, vhat, 3)?[0].1)
}
