//! Fourier multipliers, the pressure-eliminating tensor `A^k_l`, the
//! projected nonlinearity and the exponential-integrator Duhamel kernel.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::conv::{ConvolutionPath, Convolver};
use crate::error::{Error, Result};
use crate::field::{SpectralScalarField, SpectralVectorField};
use crate::grid::TimeGrid;
use crate::wave::WaveVector;

/// Diagonal operators acting mode by mode.
///
/// Semigroup times are the product `nu * t` wherever the viscous flow is
/// meant; the operators themselves know nothing about viscosity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Multiplier {
    /// `d/dx_j`, `j` in `0..3`: factor `i k_j`.
    Partial(usize),
    /// `Delta^{-1}`: factor `-1 / |k|_e^2`.
    InverseLaplacian,
    /// `D`: factor `|k|_e`.
    Degree,
    /// `S^t`: factor `exp(-|k|_e^2 t)`.
    SemigroupS(f64),
    /// `R^t`: factor `exp(-|k|_e t / 2)`.
    SemigroupR(f64),
    /// `H^t = S^t R^{-t}`: factor `exp(-|k|_e t (|k|_e - 1/2))`.
    SemigroupH(f64),
}

impl Multiplier {
    /// Per-mode factor. Does not validate the time sign.
    pub fn factor(&self, k: WaveVector) -> Complex64 {
        let real = |x: f64| Complex64::new(x, 0.0);
        match *self {
            Multiplier::Partial(j) => Complex64::new(0.0, f64::from(k.component(j))),
            Multiplier::InverseLaplacian => real(-1.0 / k.norm_e_sq() as f64),
            Multiplier::Degree => real(k.norm_e()),
            Multiplier::SemigroupS(t) => real((-(k.norm_e_sq() as f64) * t).exp()),
            Multiplier::SemigroupR(t) => real((-k.norm_e() * t / 2.0).exp()),
            Multiplier::SemigroupH(t) => real(h_exponent(k.norm_e_sq(), t).exp()),
        }
    }

    fn time(&self) -> Option<f64> {
        match *self {
            Multiplier::SemigroupS(t) | Multiplier::SemigroupR(t) | Multiplier::SemigroupH(t) => {
                Some(t)
            }
            _ => None,
        }
    }
}

/// `-|k|_e (|k|_e - 1/2) t`, from the integer `|k|_e^2`.
fn h_exponent(k2: i64, t: f64) -> f64 {
    let ke = (k2 as f64).sqrt();
    -(k2 as f64 - 0.5 * ke) * t
}

/// Decay rate of the `H` kernel at `|k|_e^2 = k2`: `|k|_e (|k|_e - 1/2)`.
pub fn h_rate(k2: i64) -> f64 {
    let ke = (k2 as f64).sqrt();
    k2 as f64 - 0.5 * ke
}

pub fn apply_multiplier(spec: Multiplier, f: &SpectralScalarField) -> Result<SpectralScalarField> {
    if let Some(t) = spec.time() {
        if t < 0.0 || t.is_nan() {
            return Err(Error::NegativeTime(t));
        }
    }
    // every factor here satisfies factor(-k) = conj(factor(k))
    Ok(f.map_modes(true, |k| spec.factor(k)))
}

/// Symbol of `A^l_m = Delta^{-1} d_l d_m - delta_lm` at `k` (indices `0..3`).
/// The numerator is formed in integers.
pub fn a_factor(l: usize, m: usize, k: WaveVector) -> f64 {
    let num = i64::from(k.component(l)) * i64::from(k.component(m));
    let delta = if l == m { 1.0 } else { 0.0 };
    num as f64 / k.norm_e_sq() as f64 - delta
}

/// Applies `A^l_m` (indices `0..3`) to a scalar field.
pub fn apply_a(l: usize, m: usize, f: &SpectralScalarField) -> Result<SpectralScalarField> {
    if l > 2 || m > 2 {
        return Err(Error::InvalidArgument(format!("tensor indices ({l}, {m}) out of range")));
    }
    Ok(f.map_modes(true, |k| Complex64::new(a_factor(l, m, k), 0.0)))
}

/// `N^k(v) = sum_{j,l} A^k_l d_j (v^j v^l)`, i.e. minus the Leray projection
/// of `(v . grad) v`.
pub fn nonlinear_term(v: &SpectralVectorField) -> Result<SpectralVectorField> {
    nonlinear_term_with(&Convolver::new(v.truncation(), ConvolutionPath::Auto), v)
}

pub fn nonlinear_term_with(conv: &Convolver, v: &SpectralVectorField) -> Result<SpectralVectorField> {
    let p = conv.pair_products(v)?;
    let n = v.truncation();
    let real = v.is_real();
    let mut out = [0, 1, 2].map(|_| SpectralScalarField::zeros(n, real));
    let len = out[0].raw().len();
    let probe = &p[0][0];
    for idx in 0..len {
        if idx == len / 2 {
            continue;
        }
        let k = probe.wave_at(idx);
        let kk = k.as_array().map(f64::from);
        let k2 = k.norm_e_sq() as f64;
        // w^l = sum_j i k_j (v^j v^l)_k
        let mut w = [Complex64::new(0.0, 0.0); 3];
        for (l, wl) in w.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..3 {
                acc += p[j][l].raw()[idx] * kk[j];
            }
            *wl = Complex64::new(-acc.im, acc.re);
        }
        let kw = kk[0] * w[0] + kk[1] * w[1] + kk[2] * w[2];
        for (c, o) in out.iter_mut().enumerate() {
            o.raw_mut()[idx] = kk[c] * kw / k2 - w[c];
        }
    }
    let mut field = SpectralVectorField::new(out)?;
    field.solenoidal_checked = false;
    Ok(field)
}

/// Pressure `p = -Delta^{-1} d_i d_j (v^i v^j)`, mean dropped.
pub fn pressure(v: &SpectralVectorField) -> Result<SpectralScalarField> {
    pressure_with(&Convolver::new(v.truncation(), ConvolutionPath::Auto), v)
}

pub fn pressure_with(conv: &Convolver, v: &SpectralVectorField) -> Result<SpectralScalarField> {
    let p = conv.pair_products(v)?;
    let n = v.truncation();
    let mut out = SpectralScalarField::zeros(n, v.is_real());
    let len = out.raw().len();
    for idx in 0..len {
        if idx == len / 2 {
            continue;
        }
        let k = out.wave_at(idx);
        let kk = k.as_array().map(i64::from);
        let k2 = k.norm_e_sq() as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..3 {
            for j in 0..3 {
                acc += p[i][j].raw()[idx] * ((kk[i] * kk[j]) as f64);
            }
        }
        out.raw_mut()[idx] = -acc / k2;
    }
    Ok(out)
}

/// `(1 - e^{-z}) / z`.
fn phi1(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0 + z.powi(4) / 120.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// `(1 - e^{-z}(1 + z)) / z^2`.
fn phi2(z: f64) -> f64 {
    if z.abs() < 1e-2 {
        // sum_n (-1)^n (n + 1) z^n / (n + 2)!
        let mut term_fact = 2.0; // (n + 2)!
        let mut acc = 0.0;
        let mut zn = 1.0;
        for n in 0..10 {
            if n > 0 {
                term_fact *= (n + 2) as f64;
                zn *= -z;
            }
            acc += (n + 1) as f64 * zn / term_fact;
        }
        acc
    } else {
        (1.0 - (-z).exp() * (1.0 + z)) / (z * z)
    }
}

/// Weights for `int_{t_i}^{t_{i+1}} e^{-lambda (t_{i+1} - s)} f(s) ds` with
/// `f` linear between its node values: `w_left f_i + w_right f_{i+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepWeights {
    pub decay: f64,
    pub left: f64,
    pub right: f64,
}

impl StepWeights {
    pub fn new(lambda: f64, h: f64) -> Self {
        let z = lambda * h;
        let w0 = h * phi1(z);
        let w1 = h * phi2(z); // int_0^h s e^{-lambda s} ds / h
        Self {
            decay: (-z).exp(),
            left: w1,
            right: w0 - w1,
        }
    }
}

/// Cumulative exponential-integrator quadrature on a time grid for rates
/// that depend on the mode only through the integer `|k|_e^2`.
#[derive(Debug, Clone)]
pub struct ExpQuadrature {
    grid: TimeGrid,
    max_k2: usize,
    // weights[interval * (max_k2 + 1) + k2]
    weights: Vec<StepWeights>,
}

impl ExpQuadrature {
    /// `rate(k2)` is the decay rate at `|k|_e^2 = k2`, already multiplied by
    /// the viscosity.
    pub fn new<F: Fn(i64) -> f64>(grid: &TimeGrid, n: usize, rate: F) -> Self {
        let max_k2 = 3 * n * n;
        let rates: Vec<f64> = (0..=max_k2 as i64).map(&rate).collect();
        let mut weights = Vec::with_capacity(grid.len().saturating_sub(1) * (max_k2 + 1));
        for w in grid.times().windows(2) {
            let h = w[1] - w[0];
            weights.extend(rates.iter().map(|&l| StepWeights::new(l, h)));
        }
        Self {
            grid: grid.clone(),
            max_k2,
            weights,
        }
    }

    /// Heat-type kernel `e^{-nu |k|^2 (t - s)}` (the `S` semigroup).
    pub fn heat(grid: &TimeGrid, n: usize, nu: f64) -> Self {
        Self::new(grid, n, |k2| nu * k2 as f64)
    }

    /// Smoothing kernel `e^{-nu |k|(|k| - 1/2)(t - s)}` (the `H` semigroup).
    pub fn smoothing(grid: &TimeGrid, n: usize, nu: f64) -> Self {
        Self::new(grid, n, |k2| nu * h_rate(k2))
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn step(&self, interval: usize, k2: usize) -> StepWeights {
        self.weights[interval * (self.max_k2 + 1) + k2]
    }

    /// Returns `I(t_i) = int_0^{t_i} e^{-lambda_k (t_i - s)} f_k(s) ds` for every
    /// grid node, `f` given by its node samples.
    pub fn accumulate(&self, samples: &[SpectralScalarField]) -> Result<Vec<SpectralScalarField>> {
        if samples.is_empty() || self.grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if samples.len() != self.grid.len() {
            return Err(Error::GridMismatch);
        }
        let n = samples[0].truncation();
        if 3 * n * n > self.max_k2 {
            return Err(Error::TruncationMismatch {
                left: n,
                right: ((self.max_k2 / 3) as f64).sqrt() as usize,
            });
        }
        let real = samples.iter().all(|s| s.is_real());
        let k2_table: Vec<usize> = (0..samples[0].raw().len())
            .map(|i| samples[0].wave_at(i).norm_e_sq() as usize)
            .collect();
        let mut out = Vec::with_capacity(samples.len());
        let mut acc = SpectralScalarField::zeros(n, real);
        out.push(acc.clone());
        for i in 0..samples.len() - 1 {
            let (fl, fr) = (samples[i].raw(), samples[i + 1].raw());
            if samples[i + 1].truncation() != n {
                return Err(Error::TruncationMismatch {
                    left: n,
                    right: samples[i + 1].truncation(),
                });
            }
            let raw = acc.raw_mut();
            for idx in 0..raw.len() {
                let w = self.step(i, k2_table[idx]);
                raw[idx] = raw[idx] * w.decay + fl[idx] * w.left + fr[idx] * w.right;
            }
            let zero = raw.len() / 2;
            raw[zero] = Complex64::new(0.0, 0.0);
            out.push(acc.clone());
        }
        Ok(out)
    }
}

/// Single-pair Duhamel kernel
/// `int_0^t e^{-nu |k|(|k| - 1/2)(t - s)} |k| (u w)_k(s) ds`
/// with `u`, `w` sampled on `grid` and `t` its last node.
pub fn duhamel_phi(
    u: &[SpectralScalarField],
    w: &[SpectralScalarField],
    grid: &TimeGrid,
    nu: f64,
) -> Result<SpectralScalarField> {
    if u.is_empty() || grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if u.len() != grid.len() || w.len() != grid.len() {
        return Err(Error::GridMismatch);
    }
    let n = u[0].truncation();
    let conv = Convolver::new(n, ConvolutionPath::Auto);
    let integrand = u
        .iter()
        .zip(w)
        .map(|(a, b)| {
            conv.product(a, b)
                .and_then(|p| apply_multiplier(Multiplier::Degree, &p))
        })
        .collect::<Result<Vec<_>>>()?;
    let quad = ExpQuadrature::smoothing(grid, n, nu);
    Ok(quad.accumulate(&integrand)?.pop().unwrap())
}

/// `||H^t D(u w)||_{H^1} / (||u|| ||w||)`, the quantity bounded by the
/// smoothing kernel `h(t)`.
pub fn smoothing_ratio(
    conv: &Convolver,
    u: &SpectralScalarField,
    w: &SpectralScalarField,
    t: f64,
) -> Result<f64> {
    let p = conv.product(u, w)?;
    let g = apply_multiplier(Multiplier::SemigroupH(t), &apply_multiplier(Multiplier::Degree, &p)?)?;
    Ok(g.h1_norm() / (u.h1_norm() * w.h1_norm()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn single(n: usize, k: [i32; 3], v: f64) -> SpectralScalarField {
        SpectralScalarField::from_modes(n, [(WaveVector::from_array(k), c(v))]).unwrap()
    }

    fn shear(n: usize) -> SpectralVectorField {
        let cos = SpectralScalarField::from_modes(
            n,
            [(WaveVector::new(1, 0, 0), c(0.5)), (WaveVector::new(-1, 0, 0), c(0.5))],
        )
        .unwrap();
        let z = SpectralScalarField::zeros(n, true);
        SpectralVectorField::new([z.clone(), cos, z]).unwrap()
    }

    #[test]
    fn multiplier_examples() {
        let f = single(2, [1, 1, 0], 1.0);
        let g = apply_multiplier(Multiplier::InverseLaplacian, &f).unwrap();
        assert_eq!(g.get(WaveVector::new(1, 1, 0)), c(-0.5));

        let f = single(2, [2, 0, 0], 1.0);
        let g = apply_multiplier(Multiplier::SemigroupH(1.0), &f).unwrap();
        assert!((g.get(WaveVector::new(2, 0, 0)).re - (-3f64).exp()).abs() < 1e-16);

        let f = single(2, [1, -2, 1], 0.3);
        assert_eq!(apply_multiplier(Multiplier::SemigroupS(0.0), &f).unwrap(), f);

        assert!(matches!(
            apply_multiplier(Multiplier::SemigroupR(-1.0), &f),
            Err(Error::NegativeTime(_))
        ));
    }

    #[test]
    fn semigroup_factors_in_unit_interval() {
        for k1 in -4..=4 {
            for k2 in -4..=4 {
                for k3 in -4..=4 {
                    let k = WaveVector::new(k1, k2, k3);
                    if k.is_zero() {
                        continue;
                    }
                    for t in [0.0, 1e-3, 0.5, 3.0] {
                        for m in [
                            Multiplier::SemigroupS(t),
                            Multiplier::SemigroupR(t),
                            Multiplier::SemigroupH(t),
                        ] {
                            let f = m.factor(k).re;
                            assert!(f > 0.0 && f <= 1.0, "{m:?} at {k}: {f}");
                        }
                        // H^t = S^t R^{-t}
                        let s = Multiplier::SemigroupS(t).factor(k).re;
                        let r_inv = Multiplier::SemigroupR(-t).factor(k).re;
                        let h = Multiplier::SemigroupH(t).factor(k).re;
                        let expo = h_exponent(k.norm_e_sq(), t).abs();
                        assert!((s * r_inv - h).abs() <= 1e-15 * (1.0 + expo) * h);
                    }
                }
            }
        }
    }

    #[test]
    fn a_tensor_examples() {
        assert_eq!(a_factor(0, 0, WaveVector::new(1, 0, 0)), 0.0);
        assert_eq!(a_factor(0, 1, WaveVector::new(1, 1, 0)), 0.5);
        // sum_k i k_k A^k_l = 0
        for k in [WaveVector::new(1, 2, 3), WaveVector::new(-4, 0, 1), WaveVector::new(2, 2, -2)] {
            for l in 0..3 {
                let s: f64 = (0..3).map(|j| f64::from(k.component(j)) * a_factor(j, l, k)).sum();
                assert!(s.abs() < 1e-14);
            }
        }
    }

    #[test]
    fn majorant_constant_for_second_derivatives() {
        for k1 in -32i32..=32 {
            for k2 in -32i32..=32 {
                for k3 in -32i32..=32 {
                    let k = WaveVector::new(k1, k2, k3);
                    if k.is_zero() {
                        continue;
                    }
                    for j in 0..3 {
                        for l in 0..3 {
                            let num = (i64::from(k.component(j)) * i64::from(k.component(l))).abs();
                            assert!(num <= k.norm_e_sq());
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn shear_flow_has_no_nonlinearity_or_pressure() {
        let v = shear(3);
        let nl = nonlinear_term(&v).unwrap();
        assert!(nl.hs_norm(0.0) < 1e-15);
        assert!(pressure(&v).unwrap().hs_norm(0.0) < 1e-15);
        let z = SpectralVectorField::zeros(3);
        assert_eq!(nonlinear_term(&z).unwrap().hs_norm(0.0), 0.0);
        assert_eq!(pressure(&z).unwrap().hs_norm(0.0), 0.0);
    }

    #[test]
    fn duhamel_constant_integrand() {
        // u w = mode k with constant coefficient; u = w = cos-like pair
        let nu = 0.7;
        let t_end = 0.9;
        let grid = TimeGrid::uniform(t_end, 7).unwrap();
        let u = single(2, [1, 0, 0], 1.0);
        let w = single(2, [0, 1, 0], 2.0);
        let us = vec![u; grid.len()];
        let ws = vec![w; grid.len()];
        let out = duhamel_phi(&us, &ws, &grid, nu).unwrap();
        let k = WaveVector::new(1, 1, 0);
        let ke = 2f64.sqrt();
        let rate = nu * ke * (ke - 0.5);
        let expect = ke * 2.0 * (1.0 - (-rate * t_end).exp()) / rate;
        assert!((out.get(k).re - expect).abs() < 1e-14);
    }

    #[test]
    fn duhamel_zero_time_and_empty_grid() {
        let grid = TimeGrid::from_times(vec![0.0]).unwrap();
        let u = single(1, [1, 0, 0], 1.0);
        let out = duhamel_phi(std::slice::from_ref(&u), std::slice::from_ref(&u), &grid, 1.0).unwrap();
        assert_eq!(out.hs_norm(0.0), 0.0);
        assert!(matches!(duhamel_phi(&[], &[], &grid, 1.0), Err(Error::EmptyGrid)));
    }

    #[test]
    fn exp_quadrature_exact_for_linear_integrands() {
        // f(s) = slope * s at one mode; closed form
        // int_0^t e^{-phi(t-s)} s ds = (t - (1 - e^{-phi t}) / phi) / phi
        let grid = TimeGrid::build(1.3, &crate::grid::GridSpec::default()).unwrap();
        let k = WaveVector::new(2, 1, 0);
        let slope = 0.37;
        for nu in [1e-4, 0.3, 1.0, 40.0] {
            let quad = ExpQuadrature::smoothing(&grid, 2, nu);
            let samples: Vec<_> = grid
                .times()
                .iter()
                .map(|&s| {
                    SpectralScalarField::from_modes(2, [(k, c(slope * s))]).unwrap()
                })
                .collect();
            let out = quad.accumulate(&samples).unwrap();
            let phi = nu * h_rate(k.norm_e_sq());
            for (t, f) in grid.times().iter().zip(&out) {
                let z = phi * t;
                let expect = if z < 1.0 {
                    // t^2 sum_n (-z)^n / (n + 2)!
                    let (mut term, mut sum) = (0.5, 0.0);
                    for n in 0..30 {
                        sum += term;
                        term *= -z / (n + 3) as f64;
                    }
                    slope * t * t * sum
                } else {
                    slope * (t + (-z).exp_m1() / phi) / phi
                };
                let got = f.get(k).re;
                assert!((got - expect).abs() <= 1e-12 * expect.abs().max(1e-3), "nu={nu} t={t}: {got} vs {expect}");
            }
        }
    }

    #[test]
    fn phi_series_match_closed_forms() {
        for z in [1e-3f64, 5e-3, 9.9e-3] {
            let closed = (1.0 - (-z).exp() * (1.0 + z)) / (z * z);
            assert!((phi2(z) - closed).abs() < 1e-9);
            assert!((phi1(z * 0.1) + (-(z * 0.1)).exp_m1() / (z * 0.1)).abs() < 1e-15);
        }
    }

    fn arb_scalar(n: usize) -> impl Strategy<Value = SpectralScalarField> {
        let side = 2 * n + 1;
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), side * side * side).prop_map(
            move |v| {
                let mut f = SpectralScalarField::zeros(n, false);
                let mid = v.len() / 2;
                for (i, (re, im)) in v.into_iter().enumerate() {
                    if i != mid {
                        f.raw_mut()[i] = Complex64::new(re, im);
                    }
                }
                f.enforce_reality()
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn semigroup_property(f in arb_scalar(2), t1 in 0.0f64..2.0, t2 in 0.0f64..2.0) {
            for (a, b, ab) in [
                (Multiplier::SemigroupS(t1), Multiplier::SemigroupS(t2), Multiplier::SemigroupS(t1 + t2)),
                (Multiplier::SemigroupR(t1), Multiplier::SemigroupR(t2), Multiplier::SemigroupR(t1 + t2)),
                (Multiplier::SemigroupH(t1), Multiplier::SemigroupH(t2), Multiplier::SemigroupH(t1 + t2)),
            ] {
                let two = apply_multiplier(b, &apply_multiplier(a, &f).unwrap()).unwrap();
                let one = apply_multiplier(ab, &f).unwrap();
                for ((_, x), (_, y)) in two.modes().zip(one.modes()) {
                    prop_assert!((x - y).norm() <= 1e-14 * y.norm().max(1e-300));
                }
            }
        }

        #[test]
        fn a_annihilates_gradients(g in arb_scalar(2)) {
            let grad: Vec<_> = (0..3)
                .map(|m| apply_multiplier(Multiplier::Partial(m), &g).unwrap())
                .collect();
            for l in 0..3 {
                let mut acc = SpectralScalarField::zeros(2, true);
                for (m, gm) in grad.iter().enumerate() {
                    acc = &acc + &apply_a(l, m, gm).unwrap();
                }
                prop_assert!(acc.hs_norm(0.0) <= 1e-13 * (1.0 + g.hs_norm(1.0)));
            }
        }

        #[test]
        fn nonlinear_term_is_solenoidal(a in arb_scalar(3), b in arb_scalar(3), c in arb_scalar(3)) {
            let v = SpectralVectorField::new([a, b, c]).unwrap();
            let nl = nonlinear_term(&v).unwrap();
            prop_assert!(nl.divergence_residual() <= 1e-12 * nl.hs_norm(0.0));
            prop_assert!(nl.is_real());
            prop_assert_eq!(nl.reality_defect(), 0.0);
        }

        #[test]
        fn r_splitting_majorant(w in prop::collection::vec(0.0f64..1.0, 124), t in 0.0f64..3.0) {
            // (R^t W)^2 << R^t (W^2) for nonnegative W
            let mut f = SpectralScalarField::zeros(2, false);
            let mut vals = w.into_iter();
            for i in 0..f.raw().len() {
                if i != f.raw().len() / 2 {
                    f.raw_mut()[i] = Complex64::new(vals.next().unwrap(), 0.0);
                }
            }
            let f = f.enforce_reality();
            let conv = Convolver::new(2, ConvolutionPath::Direct);
            let rw = apply_multiplier(Multiplier::SemigroupR(t), &f).unwrap();
            let lhs = conv.product(&rw, &rw).unwrap();
            let rhs = apply_multiplier(Multiplier::SemigroupR(t), &conv.product(&f, &f).unwrap()).unwrap();
            for ((_, x), (_, y)) in lhs.modes().zip(rhs.modes()) {
                prop_assert!(x.re <= y.re * (1.0 + 1e-13) + 1e-15);
            }
        }
    }
}
