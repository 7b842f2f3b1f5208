//! Desk-scale checks of the envelope inequality, coefficient decay and
//! long-time decay on computed trajectories.
//!
//! Nothing here proves analyticity. The report certifies the discrete
//! envelope inequality on the computed coefficients, in floating point,
//! with the tolerances stated in each field.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::SpectralVectorField;
use crate::majorant::{
    blowup_bracket, build_majorant, majorizes, BracketConfig, MajorantConfig, MajorantTrajectory,
};
use crate::mild::{solve_mild, SolverConfig, VelocityTrajectory};
use crate::wave::WaveVector;

/// Coefficients below this modulus are excluded from the radius fit.
pub const RADIUS_NOISE_FLOOR: f64 = 1e-13;

/// `alpha` in `alpha |x|_m <= |x|_e`.
pub const ALPHA: f64 = 1.0;

/// Serialises `+inf` as the string `"+inf"`, finite values as numbers.
pub fn serialize_extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("+inf")
    } else {
        s.serialize_f64(*v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointRecord {
    pub t: f64,
    /// `max_k |sum_j k_j v^j_k|`.
    pub divergence_residual: f64,
    pub majorant_ok: bool,
    pub worst_ratio: f64,
    pub worst_mode: Option<WaveVector>,
    pub h1_norm: f64,
    /// Fitted exponential decay rate of `max_j |v^j_k|` in `|k|_e`.
    #[serde(serialize_with = "serialize_extended")]
    pub analyticity_radius_fit: f64,
    /// `min(sigma, nu t / 2) * alpha`.
    #[serde(serialize_with = "serialize_extended")]
    pub certified_strip: f64,
    /// `nu alpha t / 4`, the strip half-width in the existence domain.
    pub domain_strip: f64,
    /// `||v(t)||_{H^1} e^{nu t / 2} / ||v(0)||_{H^1}`.
    pub decay_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificationReport {
    pub nu: f64,
    pub truncation: usize,
    pub slack: f64,
    pub alpha: f64,
    pub majorant_a: f64,
    pub envelope_noise_floor: f64,
    pub checkpoints: Vec<CheckpointRecord>,
    /// Envelope certified at every checkpoint.
    pub majorant_certified: bool,
    pub decay_certified: bool,
    /// The majorant showed no blow-up up to the tested horizon.
    pub global_small_data: bool,
    pub worst_ratio: f64,
    pub worst_t: f64,
    pub worst_mode: Option<WaveVector>,
    /// `||V||^2_{H^1}` over `|k|_m > N - 2` at the last checkpoint.
    pub majorant_tail_mass: f64,
}

impl CertificationReport {
    pub fn summary(&self) -> String {
        let verdict = |b: bool| if b { "yes" } else { "no" };
        let mut s = String::new();
        s.push_str(&format!(
            "checkpoints: {}  nu = {}  N = {}  slack = {}\n",
            self.checkpoints.len(),
            self.nu,
            self.truncation,
            self.slack
        ));
        s.push_str(&format!(
            "envelope certified: {}  (worst ratio {:.6e} at t = {:.6e}, mode {})\n",
            verdict(self.majorant_certified),
            self.worst_ratio,
            self.worst_t,
            self.worst_mode
                .map(|k| k.to_string())
                .unwrap_or_else(|| "-".into())
        ));
        s.push_str(&format!(
            "decay e^(-nu t/2) certified: {}\n",
            verdict(self.decay_certified)
        ));
        s.push_str(&format!(
            "majorant global on tested horizon: {}\n",
            verdict(self.global_small_data)
        ));
        if let Some(last) = self.checkpoints.last() {
            s.push_str(&format!(
                "final t = {:.6e}: |v|_H1 = {:.6e}, sigma fit = {}, certified strip = {}, domain strip = {:.6e}\n",
                last.t,
                last.h1_norm,
                fmt_ext(last.analyticity_radius_fit),
                fmt_ext(last.certified_strip),
                last.domain_strip
            ));
        }
        s.push_str(&format!(
            "majorant tail mass (|k|_m > N-2): {:.6e}\n",
            self.majorant_tail_mass
        ));
        s
    }
}

fn fmt_ext(v: f64) -> String {
    if v.is_infinite() {
        "+inf".into()
    } else {
        format!("{v:.6e}")
    }
}

/// Least-squares decay rate `sigma` in `log max_j |v^j_k| ~ c - sigma |k|_e`
/// over modes above `floor`. `+inf` when fewer than two distinct `|k|_e`
/// survive (nothing to fit); clamped at 0 from below.
pub fn fit_decay_rate(v: &SpectralVectorField, floor: f64) -> f64 {
    let mut pts = Vec::new();
    for (k, _) in v.components[0].modes() {
        let m = v.max_component_modulus(k);
        if m > floor {
            pts.push((k.norm_e(), m.ln()));
        }
    }
    if pts.len() < 2 {
        return f64::INFINITY;
    }
    let len = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / len;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / len;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 1e-12 * len {
        return f64::INFINITY;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (-sxy / sxx).max(0.0)
}

/// Envelope, divergence and decay verdicts for a velocity trajectory
/// against its majorant.
pub fn certify(
    velocity: &VelocityTrajectory,
    majorant: &MajorantTrajectory,
    slack: f64,
) -> Result<CertificationReport> {
    if velocity.frames.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if velocity.grid != majorant.grid {
        return Err(Error::GridMismatch);
    }
    let env = majorizes(&velocity.frames, velocity.grid.times(), majorant, slack)?;
    let nu = velocity.nu;
    let h0 = velocity.frames[0].h1_norm();
    let decay = decay_check(velocity)?;
    let checkpoints = velocity
        .grid
        .times()
        .iter()
        .zip(&velocity.frames)
        .zip(&env.per_frame_ratio)
        .map(|((&t, v), &ratio)| {
            let sigma = fit_decay_rate(v, RADIUS_NOISE_FLOOR);
            let h1 = v.h1_norm();
            CheckpointRecord {
                t,
                divergence_residual: v.divergence_residual(),
                majorant_ok: ratio <= slack,
                worst_ratio: ratio,
                worst_mode: None,
                h1_norm: h1,
                analyticity_radius_fit: sigma,
                certified_strip: sigma.min(nu * t / 2.0) * ALPHA,
                domain_strip: nu * ALPHA * t / 4.0,
                decay_ratio: if h0 > 0.0 { h1 * (nu * t / 2.0).exp() / h0 } else { 0.0 },
            }
        })
        .collect::<Vec<_>>();
    let mut checkpoints = checkpoints;
    if let Some(rec) = checkpoints.iter_mut().find(|c| c.t == env.worst_t) {
        rec.worst_mode = env.worst_mode;
    }
    let last = majorant.frames.len() - 1;
    Ok(CertificationReport {
        nu,
        truncation: velocity.truncation(),
        slack,
        alpha: ALPHA,
        majorant_a: majorant.a_const,
        envelope_noise_floor: env.noise_floor,
        majorant_certified: checkpoints.iter().all(|c| c.majorant_ok),
        decay_certified: decay.ok,
        global_small_data: false,
        worst_ratio: env.worst_ratio,
        worst_t: env.worst_t,
        worst_mode: env.worst_mode,
        majorant_tail_mass: majorant.tail_mass(last),
        checkpoints,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayCheck {
    pub ok: bool,
    pub worst_t: f64,
    pub worst_ratio: f64,
}

/// Relative margin allowed over the `t = 0` value in [`decay_check`].
pub const DECAY_MARGIN: f64 = 1.01;

/// `||v(t)||_{H^1} e^{nu t / 2} <= 1.01 ||v(0)||_{H^1}` at every checkpoint.
pub fn decay_check(velocity: &VelocityTrajectory) -> Result<DecayCheck> {
    if velocity.frames.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    let nu = velocity.nu;
    let h0 = velocity.frames[0].h1_norm();
    let mut worst = DecayCheck {
        ok: true,
        worst_t: 0.0,
        worst_ratio: if h0 > 0.0 { 1.0 } else { 0.0 },
    };
    for (&t, v) in velocity.grid.times().iter().zip(&velocity.frames) {
        let weighted = v.h1_norm() * (nu * t / 2.0).exp();
        let ratio = if h0 > 0.0 {
            weighted / h0
        } else if weighted > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if ratio > worst.worst_ratio {
            worst.worst_ratio = ratio;
            worst.worst_t = t;
        }
    }
    worst.ok = worst.worst_ratio <= DECAY_MARGIN;
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularSetRow {
    pub amplitude: f64,
    pub initial_h1_norm: f64,
    /// Lower end of the majorant blow-up bracket, `+inf` when global.
    #[serde(serialize_with = "serialize_extended")]
    pub certified_horizon: f64,
    /// Largest tested horizon on which the mild Picard iteration converged,
    /// `+inf` when it converged at `t_max`.
    #[serde(serialize_with = "serialize_extended")]
    pub solver_horizon: f64,
    /// `||v(t)||_{H^1}` increased somewhere on the converged solve.
    pub norm_increase_observed: bool,
    pub majorant_global: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeConfig {
    pub solver: SolverConfig,
    pub majorant: MajorantConfig,
    pub bracket: BracketConfig,
    pub t_max: f64,
    /// Majorant blow-up threshold as a multiple of `1 + ||V0||_{H^1}`.
    pub bound_factor: f64,
    /// Relative width at which the solver-horizon bisection stops.
    pub solver_rel_width: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            majorant: MajorantConfig::default(),
            bracket: BracketConfig::default(),
            t_max: 5.0,
            bound_factor: 1e3,
            solver_rel_width: 0.05,
        }
    }
}

fn mild_converges(v0: &SpectralVectorField, cfg: &SolverConfig, horizon: f64) -> Result<Option<VelocityTrajectory>> {
    let cfg = SolverConfig { horizon, ..cfg.clone() };
    match solve_mild(v0, &cfg) {
        Ok(t) => Ok(Some(t)),
        Err(Error::NoConvergence { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn solver_horizon(v0: &SpectralVectorField, cfg: &ProbeConfig) -> Result<(f64, Option<VelocityTrajectory>)> {
    if let Some(t) = mild_converges(v0, &cfg.solver, cfg.t_max)? {
        return Ok((f64::INFINITY, Some(t)));
    }
    let mut hi = cfg.t_max;
    let mut lo = hi / 2.0;
    let mut best = loop {
        if let Some(t) = mild_converges(v0, &cfg.solver, lo)? {
            break t;
        }
        hi = lo;
        lo /= 2.0;
        if lo < 1e-12 * cfg.t_max {
            return Ok((0.0, None));
        }
    };
    while hi - lo > cfg.solver_rel_width * hi {
        let mid = 0.5 * (lo + hi);
        match mild_converges(v0, &cfg.solver, mid)? {
            Some(t) => {
                lo = mid;
                best = t;
            }
            None => hi = mid,
        }
    }
    Ok((lo, Some(best)))
}

/// For each amplitude: majorant blow-up bracket, mild-solver horizon and
/// whether the `H^1` norm ever increased. `make` builds the initial field.
pub fn singular_set_probe<F>(amplitudes: &[f64], make: F, cfg: &ProbeConfig) -> Result<Vec<SingularSetRow>>
where
    F: Fn(f64) -> Result<SpectralVectorField>,
{
    amplitudes
        .iter()
        .map(|&amp| {
            let v0 = make(amp)?;
            let maj0 = build_majorant(&v0);
            let bound = cfg.bound_factor * (1.0 + maj0.h1_norm());
            let bracket = blowup_bracket(&maj0, cfg.t_max, bound, &cfg.majorant, &cfg.bracket)?;
            let (horizon, traj) = solver_horizon(&v0, cfg)?;
            let norm_increase_observed = traj.is_some_and(|t| {
                t.h1_norms().windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-12))
            });
            Ok(SingularSetRow {
                amplitude: amp,
                initial_h1_norm: v0.h1_norm(),
                certified_horizon: if bracket.is_global() { f64::INFINITY } else { bracket.t_lo },
                solver_horizon: horizon,
                norm_increase_observed,
                majorant_global: bracket.is_global(),
            })
        })
        .collect()
}
