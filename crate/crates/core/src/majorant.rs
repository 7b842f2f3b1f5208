//! Scalar majorant equation.
//!
//! The envelope solves
//!
//! ```text
//! V(t) = H^{nu t} V0 + a int_0^t H^{nu (t - s)} D(V^2)(s) ds
//! ```
//!
//! with nonnegative coefficients, by Picard iteration from the linear flow.
//! Because the nonlinearity has nonnegative coefficients the iterates
//! increase monotonically; the iteration converges exactly when a bounded
//! solution exists on the whole interval, which is what the blow-up
//! bracket exploits.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conv::{ConvolutionPath, Convolver};
use crate::error::{Error, Result};
use crate::field::{SpectralScalarField, SpectralVectorField};
use crate::grid::{GridSpec, TimeGrid};
use crate::operators::{h_rate, ExpQuadrature};
use crate::wave::WaveVector;

/// Default majorant constant `a = 2 / alpha` with `alpha = 1`.
pub const DEFAULT_A: f64 = 2.0;

/// Nonnegative, even, real-coefficient field.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorantField(SpectralScalarField);

impl MajorantField {
    pub fn new(field: SpectralScalarField) -> Result<Self> {
        for (k, c) in field.modes() {
            if c.im != 0.0 || c.re < 0.0 || !c.re.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "majorant coefficient at {k} is {c}, expected a nonnegative real"
                )));
            }
            if field.get(-k) != c {
                return Err(Error::InvalidArgument(format!(
                    "majorant is not symmetric at {k}"
                )));
            }
        }
        let mut field = field;
        field.set_real_flag(true);
        Ok(Self(field))
    }

    /// Clamps rounding-level negatives and imaginary parts.
    fn from_rounded(mut field: SpectralScalarField) -> Self {
        for c in field.raw_mut() {
            *c = Complex64::new(c.re.max(0.0), 0.0);
        }
        field.set_real_flag(true);
        Self(field)
    }

    pub fn zeros(n: usize) -> Self {
        Self(SpectralScalarField::zeros(n, true))
    }

    pub fn field(&self) -> &SpectralScalarField {
        &self.0
    }

    pub fn into_field(self) -> SpectralScalarField {
        self.0
    }

    pub fn get(&self, k: WaveVector) -> f64 {
        self.0.get(k).re
    }

    pub fn truncation(&self) -> usize {
        self.0.truncation()
    }

    pub fn h1_norm(&self) -> f64 {
        self.0.h1_norm()
    }

    /// `true` when every coefficient of `self` is at least that of `other`,
    /// up to `rel_tol` times the largest coefficient of `other`.
    pub fn dominates(&self, other: &MajorantField, rel_tol: f64) -> bool {
        let tol = rel_tol * other.0.max_abs();
        self.0
            .raw()
            .iter()
            .zip(other.0.raw())
            .all(|(a, b)| a.re >= b.re - tol)
    }
}

/// `V0_k = max_j |v^j_k|`.
pub fn build_majorant(vhat: &SpectralVectorField) -> MajorantField {
    let n = vhat.truncation();
    let mut f = SpectralScalarField::zeros(n, true);
    {
        let raw = f.raw_mut();
        for comp in &vhat.components {
            for (dst, c) in raw.iter_mut().zip(comp.raw()) {
                dst.re = dst.re.max(c.norm());
            }
        }
        // symmetrise exactly: |v_{-k}| equals |v_k| only up to rounding
        let len = raw.len();
        for i in 0..len / 2 {
            let m = raw[i].re.max(raw[len - 1 - i].re);
            raw[i].re = m;
            raw[len - 1 - i].re = m;
        }
        raw[len / 2] = Complex64::new(0.0, 0.0);
    }
    MajorantField(f)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MajorantConfig {
    pub nu: f64,
    /// Nonlinearity constant `a`.
    pub a: f64,
    /// Stop when the sup-over-grid `H^1` increment drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Declare blow-up once any frame exceeds this `H^1` norm.
    pub bound: Option<f64>,
    /// Consecutive growing increments tolerated before declaring divergence.
    pub growth_patience: usize,
    pub convolution: ConvolutionPath,
}

impl Default for MajorantConfig {
    fn default() -> Self {
        Self {
            nu: 1.0,
            a: DEFAULT_A,
            tol: 1e-12,
            max_iter: 200,
            bound: None,
            growth_patience: 6,
            convolution: ConvolutionPath::Transform,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MajorantTrajectory {
    pub grid: TimeGrid,
    pub frames: Vec<MajorantField>,
    pub nu: f64,
    pub a_const: f64,
    pub iterations: usize,
    /// Sup-over-grid `H^1` increment of every Picard step.
    pub history: Vec<f64>,
}

impl MajorantTrajectory {
    /// `sup_t ||V(t)||_{H^1}`.
    pub fn sup_norm(&self) -> f64 {
        self.frames.iter().map(|f| f.h1_norm()).fold(0.0, f64::max)
    }

    /// `||V(t)||^2_{H^1}` restricted to the outer band `|k|_m > N - 2`,
    /// a heuristic for the truncated tail.
    pub fn tail_mass(&self, frame: usize) -> f64 {
        let f = self.frames[frame].field();
        let cut = f.truncation().saturating_sub(2) as u32;
        f.modes()
            .filter(|(k, _)| k.norm_max() > cut)
            .map(|(k, c)| c.norm_sqr() * k.norm_e_sq() as f64)
            .sum()
    }

    /// CSV dump `t,k1,k2,k3,V` of the selected frames; zero coefficients
    /// are skipped.
    pub fn write_csv<W: Write>(&self, out: W, frames: &[usize]) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "k1", "k2", "k3", "V"])?;
        for &i in frames {
            let t = self.grid.times()[i];
            for (k, c) in self.frames[i].field().support() {
                w.write_record([
                    t.to_string(),
                    k.k1.to_string(),
                    k.k2.to_string(),
                    k.k3.to_string(),
                    c.re.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// One-interval Picard machinery, exposed so the iterates can be inspected.
#[derive(Debug, Clone)]
pub struct MajorantSolver {
    conv: Convolver,
    quad: ExpQuadrature,
    linear: Vec<SpectralScalarField>,
    a: f64,
}

impl MajorantSolver {
    pub fn new(initial: &MajorantField, grid: &TimeGrid, cfg: &MajorantConfig) -> Result<Self> {
        if !(cfg.nu > 0.0) {
            return Err(Error::InvalidArgument(format!("viscosity must be positive, got {}", cfg.nu)));
        }
        if !(cfg.a >= 0.0) {
            return Err(Error::InvalidArgument(format!("a must be >= 0, got {}", cfg.a)));
        }
        let n = initial.truncation();
        let nu = cfg.nu;
        let linear = grid
            .times()
            .iter()
            .map(|&t| initial.field().map_modes(true, |k| {
                Complex64::new((-nu * h_rate(k.norm_e_sq()) * t).exp(), 0.0)
            }))
            .collect();
        Ok(Self {
            conv: Convolver::new(n, cfg.convolution),
            quad: ExpQuadrature::smoothing(grid, n, nu),
            linear,
            a: cfg.a,
        })
    }

    /// `V^0(t) = H^{nu t} V0`.
    pub fn initial_iterate(&self) -> Vec<MajorantField> {
        self.linear.iter().cloned().map(MajorantField).collect()
    }

    /// `F(V) = H^{nu t} V0 + a int_0^t H^{nu(t - s)} D(V^2) ds`.
    pub fn step(&self, current: &[MajorantField]) -> Result<Vec<MajorantField>> {
        if current.len() != self.linear.len() {
            return Err(Error::GridMismatch);
        }
        let a = self.a;
        let integrand = current
            .iter()
            .map(|v| {
                let sq = self.conv.product(v.field(), v.field())?;
                Ok(sq.map_modes(true, |k| Complex64::new(a * k.norm_e(), 0.0)))
            })
            .collect::<Result<Vec<_>>>()?;
        let integral = self.quad.accumulate(&integrand)?;
        Ok(self
            .linear
            .iter()
            .zip(integral)
            .map(|(lin, int)| MajorantField::from_rounded(lin + &int))
            .collect())
    }
}

fn sup_increment(a: &[MajorantField], b: &[MajorantField]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.field().hs_distance(y.field(), 1.0).unwrap_or(f64::INFINITY))
        .fold(0.0, f64::max)
}

/// Picard iteration for the majorant equation on `grid`.
pub fn solve_majorant(
    initial: &MajorantField,
    grid: &TimeGrid,
    cfg: &MajorantConfig,
) -> Result<MajorantTrajectory> {
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let solver = MajorantSolver::new(initial, grid, cfg)?;
    let mut frames = solver.initial_iterate();
    let mut history = Vec::new();
    let mut growing = 0usize;
    for it in 1..=cfg.max_iter {
        let next = solver.step(&frames)?;
        let inc = sup_increment(&next, &frames);
        let sup = next.iter().map(|f| f.h1_norm()).fold(0.0, f64::max);
        if let Some(&prev) = history.last() {
            growing = if inc > prev { growing + 1 } else { 0 };
        }
        history.push(inc);
        let exceeded = cfg.bound.is_some_and(|b| sup > b);
        if !inc.is_finite() || !sup.is_finite() || exceeded || growing >= cfg.growth_patience {
            return Err(Error::NonContraction {
                iterations: it,
                last_increment: inc,
                history,
            });
        }
        frames = next;
        if inc <= cfg.tol {
            return Ok(MajorantTrajectory {
                grid: grid.clone(),
                frames,
                nu: cfg.nu,
                a_const: cfg.a,
                iterations: it,
                history,
            });
        }
    }
    Err(Error::NonContraction {
        iterations: cfg.max_iter,
        last_increment: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

/// Worst envelope violation found by [`majorizes`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MajorizationReport {
    pub ok: bool,
    pub slack: f64,
    pub worst_ratio: f64,
    pub worst_t: f64,
    pub worst_mode: Option<WaveVector>,
    pub worst_component: Option<usize>,
    /// Coefficients with modulus at or below this are rounding noise and
    /// are not compared.
    pub noise_floor: f64,
    pub per_frame_ratio: Vec<f64>,
}

/// Relative noise floor for envelope comparisons, scaled by the largest
/// initial velocity coefficient.
pub const ENVELOPE_NOISE_FLOOR: f64 = 1e-13;

/// Checks `|v^j_k(t)| <= slack V_k(t) exp(-nu t |k|_e / 2)` at every
/// checkpoint, mode and component.
pub fn majorizes(
    velocity: &[SpectralVectorField],
    times: &[f64],
    majorant: &MajorantTrajectory,
    slack: f64,
) -> Result<MajorizationReport> {
    if velocity.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if velocity.len() != majorant.frames.len() || times != majorant.grid.times() {
        return Err(Error::GridMismatch);
    }
    if !(slack >= 1.0) {
        return Err(Error::InvalidArgument(format!("slack must be >= 1, got {slack}")));
    }
    let n = velocity[0].truncation();
    if majorant.frames[0].truncation() != n {
        return Err(Error::TruncationMismatch {
            left: n,
            right: majorant.frames[0].truncation(),
        });
    }
    let scale = velocity[0]
        .components
        .iter()
        .map(|c| c.max_abs())
        .fold(0.0, f64::max);
    let floor = ENVELOPE_NOISE_FLOOR * scale;
    let nu = majorant.nu;
    let mut report = MajorizationReport {
        ok: true,
        slack,
        worst_ratio: 0.0,
        worst_t: 0.0,
        worst_mode: None,
        worst_component: None,
        noise_floor: floor,
        per_frame_ratio: Vec::with_capacity(velocity.len()),
    };
    for ((v, &t), maj) in velocity.iter().zip(times).zip(&majorant.frames) {
        let mut frame_worst = 0.0f64;
        let env_raw = maj.field().raw();
        for (j, comp) in v.components.iter().enumerate() {
            for (idx, c) in comp.raw().iter().enumerate() {
                let m = c.norm();
                if m <= floor {
                    continue;
                }
                let k = comp.wave_at(idx);
                let env = env_raw[idx].re * (-nu * t * k.norm_e() / 2.0).exp();
                let ratio = if env > 0.0 { m / env } else { f64::INFINITY };
                frame_worst = frame_worst.max(ratio);
                if ratio > report.worst_ratio {
                    report.worst_ratio = ratio;
                    report.worst_t = t;
                    report.worst_mode = Some(k);
                    report.worst_component = Some(j);
                }
            }
        }
        report.per_frame_ratio.push(frame_worst);
    }
    report.ok = report.worst_ratio <= slack;
    Ok(report)
}

/// `T = c / (1 + ||v0||)^16`.
pub fn horizon_t(initial_norm: f64, c_cal: f64) -> Result<f64> {
    if !(c_cal > 0.0) || !(initial_norm >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need c_cal > 0 and norm >= 0, got {c_cal}, {initial_norm}"
        )));
    }
    Ok(c_cal / (1.0 + initial_norm).powi(16))
}

/// Smoothing kernel `h(t) = c t^{-7/8}` on `(0, 1]`, `c e^{-t/2}` beyond.
pub fn kernel_h(t: f64, c_cal: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("kernel_h needs t > 0, got {t}")));
    }
    Ok(if t <= 1.0 {
        c_cal * t.powf(-7.0 / 8.0)
    } else {
        // the right limit at t = 1 is c e^{-1/2}, not c
        c_cal * (-t / 2.0).exp()
    })
}

/// `int_0^T h(nu tau) d tau` in closed form.
pub fn kernel_h_integral(horizon: f64, nu: f64, c_cal: f64) -> Result<f64> {
    if !(horizon >= 0.0) || !(nu > 0.0) {
        return Err(Error::InvalidArgument("need T >= 0 and nu > 0".into()));
    }
    let s = nu * horizon;
    let scaled = if s <= 1.0 {
        8.0 * s.powf(1.0 / 8.0)
    } else {
        8.0 + 2.0 * ((-0.5f64).exp() - (-s / 2.0).exp())
    };
    Ok(c_cal * scaled / nu)
}

/// Interval localising where the majorant stops having a bounded solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub t_lo: f64,
    /// `None` means no failure up to `T_max`, i.e. global existence signal.
    pub t_hi: Option<f64>,
    pub solves: usize,
}

impl Bracket {
    pub fn is_global(&self) -> bool {
        self.t_hi.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BracketConfig {
    pub grid: GridSpec,
    /// Relative bracket width `(T_hi - T_lo) / T_hi` to stop at.
    pub rel_width: f64,
}

impl Default for BracketConfig {
    fn default() -> Self {
        Self {
            grid: GridSpec {
                first_step_fraction: 1e-5,
                ratio: 1.1,
                max_step_fraction: 1e-2,
            },
            rel_width: 0.01,
        }
    }
}

fn majorant_succeeds(
    initial: &MajorantField,
    horizon: f64,
    bound: f64,
    cfg: &MajorantConfig,
    bcfg: &BracketConfig,
) -> Result<bool> {
    let grid = TimeGrid::build(horizon, &bcfg.grid)?;
    let cfg = MajorantConfig {
        bound: Some(bound),
        ..*cfg
    };
    match solve_majorant(initial, &grid, &cfg) {
        Ok(traj) => Ok(traj.sup_norm() <= bound),
        Err(Error::NonContraction { .. }) => Ok(false),
        Err(e) => Err(e),
    }
}

/// Bisection on the horizon: the majorant solve succeeds with
/// `sup ||V|| <= bound` at `t_lo` and fails at `t_hi`.
pub fn blowup_bracket(
    initial: &MajorantField,
    t_max: f64,
    bound: f64,
    cfg: &MajorantConfig,
    bcfg: &BracketConfig,
) -> Result<Bracket> {
    if !(t_max > 0.0) {
        return Err(Error::InvalidArgument(format!("T_max must be positive, got {t_max}")));
    }
    if !(bound > initial.h1_norm()) {
        return Err(Error::InvalidArgument(format!(
            "bound {bound} must exceed ||V0|| = {}",
            initial.h1_norm()
        )));
    }
    let mut solves = 1;
    if majorant_succeeds(initial, t_max, bound, cfg, bcfg)? {
        return Ok(Bracket {
            t_lo: t_max,
            t_hi: None,
            solves,
        });
    }
    let mut hi = t_max;
    let mut lo = t_max / 2.0;
    loop {
        solves += 1;
        if majorant_succeeds(initial, lo, bound, cfg, bcfg)? {
            break;
        }
        hi = lo;
        lo /= 2.0;
        if lo < 1e-12 * t_max {
            return Err(Error::InvalidArgument(
                "majorant fails on every horizon; bound too tight".into(),
            ));
        }
    }
    while hi - lo > bcfg.rel_width * hi {
        let mid = 0.5 * (lo + hi);
        solves += 1;
        if majorant_succeeds(initial, mid, bound, cfg, bcfg)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Bracket {
        t_lo: lo,
        t_hi: Some(hi),
        solves,
    })
}
