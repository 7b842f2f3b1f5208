//! Truncated zero-mean Fourier series on the 3-torus.
//!
//! A [`SpectralScalarField`] stores every coefficient `f_k` with
//! `0 < |k|_m <= N` in a dense cube indexed lexicographically by
//! `(k1, k2, k3)`; the `k = 0` slot exists in memory but is always zero.
//! Real-valued fields are flagged and kept exactly conjugate-symmetric,
//! the symmetry is not exploited for storage.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::wave::WaveVector;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralScalarField {
    n: usize,
    coeffs: Vec<Complex64>,
    real: bool,
}

impl SpectralScalarField {
    /// Zero field with truncation `n`.
    pub fn zeros(n: usize, real: bool) -> Self {
        let side = 2 * n + 1;
        Self {
            n,
            coeffs: vec![Complex64::new(0.0, 0.0); side * side * side],
            real,
        }
    }

    /// Builds a field from `(k, f_k)` pairs. Repeated modes accumulate.
    /// The `real` flag is set only when the data are already exactly
    /// conjugate-symmetric.
    pub fn from_modes<I>(n: usize, modes: I) -> Result<Self>
    where
        I: IntoIterator<Item = (WaveVector, Complex64)>,
    {
        let mut f = Self::zeros(n, false);
        for (k, c) in modes {
            if k.is_zero() {
                return Err(Error::InvalidArgument(
                    "the k = 0 mode is not representable; use subtract_mean".into(),
                ));
            }
            let idx = f.index(k).ok_or(Error::ModeOutOfBand { k, n })?;
            f.coeffs[idx] += c;
        }
        f.real = f.reality_defect() == 0.0;
        Ok(f)
    }

    pub fn truncation(&self) -> usize {
        self.n
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub(crate) fn side(&self) -> usize {
        2 * self.n + 1
    }

    pub(crate) fn raw(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub(crate) fn set_real_flag(&mut self, real: bool) {
        self.real = real;
    }

    pub fn contains(&self, k: WaveVector) -> bool {
        !k.is_zero() && (k.norm_max() as usize) <= self.n
    }

    fn index(&self, k: WaveVector) -> Option<usize> {
        if k.norm_max() as usize > self.n {
            return None;
        }
        let n = self.n as i32;
        let side = self.side();
        Some(
            ((k.k1 + n) as usize * side + (k.k2 + n) as usize) * side + (k.k3 + n) as usize,
        )
    }

    pub(crate) fn wave_at(&self, idx: usize) -> WaveVector {
        let side = self.side();
        let n = self.n as i32;
        let k3 = (idx % side) as i32 - n;
        let k2 = ((idx / side) % side) as i32 - n;
        let k1 = (idx / (side * side)) as i32 - n;
        WaveVector::new(k1, k2, k3)
    }

    /// Coefficient at `k`; zero outside the band and at `k = 0`.
    pub fn get(&self, k: WaveVector) -> Complex64 {
        self.index(k)
            .map(|i| self.coeffs[i])
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    /// Sets a single coefficient. Clears the real flag unless the caller
    /// restores symmetry with [`enforce_reality`](Self::enforce_reality).
    pub fn set(&mut self, k: WaveVector, c: Complex64) -> Result<()> {
        if k.is_zero() {
            return Err(Error::InvalidArgument("cannot set the k = 0 mode".into()));
        }
        let idx = self.index(k).ok_or(Error::ModeOutOfBand { k, n: self.n })?;
        self.coeffs[idx] = c;
        self.real = false;
        Ok(())
    }

    /// Stored modes in lexicographic `(k1, k2, k3)` order, `k = 0` skipped.
    pub fn modes(&self) -> impl Iterator<Item = (WaveVector, Complex64)> + '_ {
        let zero = self.coeffs.len() / 2;
        self.coeffs
            .iter()
            .enumerate()
            .filter(move |(i, _)| *i != zero)
            .map(move |(i, c)| (self.wave_at(i), *c))
    }

    /// Modes with nonzero coefficient.
    pub fn support(&self) -> impl Iterator<Item = (WaveVector, Complex64)> + '_ {
        self.modes().filter(|(_, c)| *c != Complex64::new(0.0, 0.0))
    }

    pub fn nnz(&self) -> usize {
        self.coeffs
            .iter()
            .filter(|c| **c != Complex64::new(0.0, 0.0))
            .count()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `sum |f_k|`.
    pub fn l1_coeffs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).sum()
    }

    /// Sobolev norm `(sum |f_k|^2 |k|_e^{2s})^{1/2}`.
    pub fn hs_norm(&self, s: f64) -> f64 {
        self.modes()
            .map(|(k, c)| c.norm_sqr() * weight(k, s))
            .sum::<f64>()
            .sqrt()
    }

    /// The default `H^1` norm.
    pub fn h1_norm(&self) -> f64 {
        self.hs_norm(1.0)
    }

    /// Coefficient-wise map `f_k -> factor(k) f_k`. Keeps the real flag only
    /// when `factor(-k) = conj(factor(k))`, which the caller asserts via
    /// `keeps_real`.
    pub fn map_modes<F>(&self, keeps_real: bool, mut factor: F) -> Self
    where
        F: FnMut(WaveVector) -> Complex64,
    {
        let mut out = self.clone();
        let zero = out.coeffs.len() / 2;
        for i in 0..out.coeffs.len() {
            if i == zero || out.coeffs[i] == Complex64::new(0.0, 0.0) {
                continue;
            }
            let k = self.wave_at(i);
            out.coeffs[i] *= factor(k);
        }
        out.real = self.real && keeps_real;
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.coeffs.iter_mut().for_each(|c| *c *= s);
        out
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::TruncationMismatch {
                left: self.n,
                right: other.n,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        out.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a += b);
        out.real = self.real && other.real;
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let mut out = self.clone();
        out.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a -= b);
        out.real = self.real && other.real;
        Ok(out)
    }

    /// `self += s * other`, used in time-stepping inner loops.
    pub(crate) fn axpy(&mut self, s: f64, other: &Self) {
        debug_assert_eq!(self.n, other.n);
        self.coeffs
            .iter_mut()
            .zip(&other.coeffs)
            .for_each(|(a, b)| *a += b * s);
        self.real = self.real && other.real;
    }

    /// `H^s` distance, convenient for convergence checks.
    pub fn hs_distance(&self, other: &Self, s: f64) -> Result<f64> {
        self.check_same(other)?;
        Ok(self
            .modes()
            .zip(other.modes())
            .map(|((k, a), (_, b))| (a - b).norm_sqr() * weight(k, s))
            .sum::<f64>()
            .sqrt())
    }

    /// Largest `|f_k - conj(f_{-k})|` over stored modes.
    pub fn reality_defect(&self) -> f64 {
        let len = self.coeffs.len();
        (0..len)
            .map(|i| (self.coeffs[i] - self.coeffs[len - 1 - i].conj()).norm())
            .fold(0.0, f64::max)
    }

    /// Projects onto real-valued fields: `f_k <- (f_k + conj(f_{-k})) / 2`.
    /// Idempotent, and exact: the result satisfies the symmetry bit-for-bit.
    pub fn enforce_reality(&self) -> Self {
        let mut out = self.clone();
        let len = out.coeffs.len();
        // -k sits at the mirrored index in the dense cube.
        for i in 0..len / 2 {
            let j = len - 1 - i;
            let avg = (self.coeffs[i] + self.coeffs[j].conj()) * 0.5;
            out.coeffs[i] = avg;
            out.coeffs[j] = avg.conj();
        }
        out.coeffs[len / 2] = Complex64::new(0.0, 0.0);
        out.real = true;
        out
    }

    /// Evaluates `sum_k f_k e^{i(k,x)}` at a complex point `x`.
    ///
    /// Terms are formed in log-modulus form and summed from smallest to
    /// largest modulus, so huge `e^{-(k, Im x)}` factors on negligible
    /// coefficients do not overflow early.
    pub fn evaluate(&self, x: [Complex64; 3]) -> Complex64 {
        let mut terms: Vec<Complex64> = self
            .support()
            .map(|(k, c)| {
                let phase = Complex64::i()
                    * (x[0] * f64::from(k.k1) + x[1] * f64::from(k.k2) + x[2] * f64::from(k.k3));
                // log|term| = ln|c| + Re(phase)
                let log_mod = c.norm().ln() + phase.re;
                let arg = c.arg() + phase.im;
                Complex64::from_polar(log_mod.exp(), arg)
            })
            .collect();
        terms.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        terms.into_iter().sum()
    }

    /// Splits raw coefficients that may include `k = 0` into the zero-mean
    /// field and the removed mean. The mean is the Galilean drift the
    /// caller should report.
    pub fn subtract_mean<I>(n: usize, raw: I) -> Result<(Self, Complex64)>
    where
        I: IntoIterator<Item = (WaveVector, Complex64)>,
    {
        let mut mean = Complex64::new(0.0, 0.0);
        let rest: Vec<_> = raw
            .into_iter()
            .filter(|(k, c)| {
                if k.is_zero() {
                    mean += c;
                    false
                } else {
                    true
                }
            })
            .collect();
        Ok((Self::from_modes(n, rest)?, mean))
    }

    /// Re-embeds the field into a different truncation, dropping modes that
    /// no longer fit.
    pub fn retruncate(&self, n: usize) -> Self {
        let mut out = Self::zeros(n, self.real);
        for (k, c) in self.modes() {
            if let Some(i) = out.index(k) {
                out.coeffs[i] = c;
            }
        }
        let zero = out.coeffs.len() / 2;
        out.coeffs[zero] = Complex64::new(0.0, 0.0);
        out
    }
}

pub(crate) fn weight(k: WaveVector, s: f64) -> f64 {
    if s == 1.0 {
        k.norm_e_sq() as f64
    } else if s == 0.0 {
        1.0
    } else {
        (k.norm_e_sq() as f64).powf(s)
    }
}

impl Add for &SpectralScalarField {
    type Output = SpectralScalarField;
    fn add(self, rhs: Self) -> SpectralScalarField {
        self.try_add(rhs).expect("truncation mismatch in +")
    }
}

impl Sub for &SpectralScalarField {
    type Output = SpectralScalarField;
    fn sub(self, rhs: Self) -> SpectralScalarField {
        self.try_sub(rhs).expect("truncation mismatch in -")
    }
}

impl Mul<f64> for &SpectralScalarField {
    type Output = SpectralScalarField;
    fn mul(self, rhs: f64) -> SpectralScalarField {
        self.scale(rhs)
    }
}

/// Three scalar fields `v = (v^1, v^2, v^3)` sharing one truncation.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralVectorField {
    pub components: [SpectralScalarField; 3],
    pub solenoidal_checked: bool,
}

impl SpectralVectorField {
    pub fn new(components: [SpectralScalarField; 3]) -> Result<Self> {
        let n = components[0].truncation();
        for c in &components[1..] {
            if c.truncation() != n {
                return Err(Error::TruncationMismatch {
                    left: n,
                    right: c.truncation(),
                });
            }
        }
        Ok(Self {
            components,
            solenoidal_checked: false,
        })
    }

    pub fn zeros(n: usize) -> Self {
        let z = SpectralScalarField::zeros(n, true);
        Self {
            components: [z.clone(), z.clone(), z],
            solenoidal_checked: true,
        }
    }

    pub fn truncation(&self) -> usize {
        self.components[0].truncation()
    }

    pub fn is_real(&self) -> bool {
        self.components.iter().all(|c| c.is_real())
    }

    pub fn hs_norm(&self, s: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.hs_norm(s).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn h1_norm(&self) -> f64 {
        self.hs_norm(1.0)
    }

    pub fn hs_distance(&self, other: &Self, s: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (a, b) in self.components.iter().zip(&other.components) {
            acc += a.hs_distance(b, s)?.powi(2);
        }
        Ok(acc.sqrt())
    }

    /// `max_k |sum_j k_j v^j_k|`.
    pub fn divergence_residual(&self) -> f64 {
        let [a, b, c] = &self.components;
        a.raw()
            .iter()
            .zip(b.raw())
            .zip(c.raw())
            .enumerate()
            .map(|(i, ((x, y), z))| {
                let k = a.wave_at(i);
                (x * f64::from(k.k1) + y * f64::from(k.k2) + z * f64::from(k.k3)).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Marks the field solenoidal if the residual is within `tol`.
    pub fn check_solenoidal(&mut self, tol: f64) -> bool {
        let ok = self.divergence_residual() <= tol;
        self.solenoidal_checked = ok;
        ok
    }

    pub fn reality_defect(&self) -> f64 {
        self.components
            .iter()
            .map(|c| c.reality_defect())
            .fold(0.0, f64::max)
    }

    pub fn enforce_reality(&self) -> Self {
        Self {
            components: self.components.clone().map(|c| c.enforce_reality()),
            solenoidal_checked: self.solenoidal_checked,
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            components: self.components.clone().map(|c| c.scale(s)),
            solenoidal_checked: self.solenoidal_checked,
        }
    }

    pub fn map_components<F>(&self, mut f: F) -> Self
    where
        F: FnMut(usize, &SpectralScalarField) -> SpectralScalarField,
    {
        Self {
            components: [0, 1, 2].map(|j| f(j, &self.components[j])),
            solenoidal_checked: false,
        }
    }

    /// Per-mode `max_j |v^j_k|`.
    pub fn max_component_modulus(&self, k: WaveVector) -> f64 {
        self.components
            .iter()
            .map(|c| c.get(k).norm())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single(n: usize, k: [i32; 3], v: Complex64) -> SpectralScalarField {
        SpectralScalarField::from_modes(n, [(WaveVector::from_array(k), v)]).unwrap()
    }

    fn cos_x1(n: usize) -> SpectralScalarField {
        SpectralScalarField::from_modes(
            n,
            [
                (WaveVector::new(1, 0, 0), c(0.5, 0.0)),
                (WaveVector::new(-1, 0, 0), c(0.5, 0.0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn hs_norm_single_modes() {
        assert_eq!(single(2, [1, 0, 0], c(1.0, 0.0)).hs_norm(1.0), 1.0);
        let f = single(2, [1, 1, 0], c(2.0, 0.0));
        assert!((f.hs_norm(1.0) - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(SpectralScalarField::zeros(3, true).hs_norm(1.0), 0.0);
    }

    #[test]
    fn parseval_matches_direct_sum() {
        let f = SpectralScalarField::from_modes(
            3,
            [
                (WaveVector::new(1, 2, 3), c(0.3, -0.4)),
                (WaveVector::new(-2, 0, 1), c(1.0, 2.0)),
            ],
        )
        .unwrap();
        let direct: f64 = 0.25 + 5.0;
        assert!((f.hs_norm(0.0).powi(2) - direct).abs() < 1e-14);
    }

    #[test]
    fn zero_mode_rejected() {
        assert!(SpectralScalarField::from_modes(2, [(WaveVector::ZERO, c(1.0, 0.0))]).is_err());
        assert!(matches!(
            SpectralScalarField::from_modes(1, [(WaveVector::new(2, 0, 0), c(1.0, 0.0))]),
            Err(Error::ModeOutOfBand { .. })
        ));
    }

    #[test]
    fn evaluate_examples() {
        let f = single(1, [1, 0, 0], c(1.0, 0.0));
        let zero = c(0.0, 0.0);
        assert_eq!(f.evaluate([zero; 3]), c(1.0, 0.0));
        let r = 0.7;
        let v = f.evaluate([c(0.0, r), zero, zero]);
        assert!((v - c((-r).exp(), 0.0)).norm() < 1e-15);
        let g = cos_x1(1);
        let v = g.evaluate([c(PI / 3.0, 0.0), zero, zero]);
        assert!((v - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn evaluate_survives_large_imaginary_parts() {
        let f = SpectralScalarField::from_modes(
            4,
            [(WaveVector::new(4, 0, 0), c(1e-300, 0.0))],
        )
        .unwrap();
        let zero = c(0.0, 0.0);
        // e^{4*150} alone overflows, the product does not.
        let v = f.evaluate([c(0.0, -150.0), zero, zero]);
        assert!(v.re.is_finite());
        assert!((v.re / (1e-300 * 600f64.exp()) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn enforce_reality_examples() {
        let g = cos_x1(2);
        assert!(g.is_real());
        assert_eq!(g.enforce_reality(), g);

        let f = single(1, [1, 0, 0], c(1.0, 0.0));
        let r = f.enforce_reality();
        assert_eq!(r.get(WaveVector::new(1, 0, 0)), c(0.5, 0.0));
        assert_eq!(r.get(WaveVector::new(-1, 0, 0)), c(0.5, 0.0));
        assert_eq!(r.enforce_reality(), r);
        assert_eq!(r.reality_defect(), 0.0);
    }

    #[test]
    fn subtract_mean_examples() {
        let (f, m) = SpectralScalarField::subtract_mean(
            1,
            [
                (WaveVector::ZERO, c(5.0, 0.0)),
                (WaveVector::new(1, 0, 0), c(1.0, 0.0)),
            ],
        )
        .unwrap();
        assert_eq!(m, c(5.0, 0.0));
        assert_eq!(f, single(1, [1, 0, 0], c(1.0, 0.0)));

        let (f, m) =
            SpectralScalarField::subtract_mean(1, [(WaveVector::new(1, 0, 0), c(1.0, 0.0))])
                .unwrap();
        assert_eq!(m, c(0.0, 0.0));
        assert_eq!(f.nnz(), 1);

        let (f, m) =
            SpectralScalarField::subtract_mean(1, [(WaveVector::ZERO, c(3.0, 0.0))]).unwrap();
        assert_eq!(m, c(3.0, 0.0));
        assert_eq!(f.nnz(), 0);
    }

    #[test]
    fn modes_are_lexicographic() {
        let f = SpectralScalarField::zeros(1, true);
        let ks: Vec<_> = f.modes().map(|(k, _)| k).collect();
        assert_eq!(ks.len(), 26);
        let mut sorted = ks.clone();
        sorted.sort();
        assert_eq!(ks, sorted);
    }

    fn arb_field(n: usize) -> impl Strategy<Value = SpectralScalarField> {
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
                f
            },
        )
    }

    proptest! {
        #[test]
        fn real_fields_evaluate_to_real_values(f in arb_field(2), x in prop::array::uniform3(-4.0f64..4.0)) {
            let g = f.enforce_reality();
            let v = g.evaluate(x.map(|t| Complex64::new(t, 0.0)));
            prop_assert!(v.im.abs() <= 1e-12 * g.l1_coeffs());
        }

        #[test]
        fn enforce_reality_is_idempotent(f in arb_field(1)) {
            let once = f.enforce_reality();
            prop_assert_eq!(once.enforce_reality(), once.clone());
            prop_assert_eq!(once.reality_defect(), 0.0);
        }
    }
}
