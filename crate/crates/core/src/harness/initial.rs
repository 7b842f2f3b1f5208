//! Initial-condition library.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::field::{SpectralScalarField, SpectralVectorField};
use crate::wave::WaveVector;

/// `A (sin x1 cos x2 cos x3, -cos x1 sin x2 cos x3, 0)` as its 16 exact
/// Fourier coefficients, embedded at truncation `n >= 1`.
pub fn taylor_green(amplitude: f64, n: usize) -> Result<SpectralVectorField> {
    if n == 0 {
        return Err(Error::InvalidArgument("Taylor-Green needs truncation >= 1".into()));
    }
    if !(amplitude >= 0.0) || !amplitude.is_finite() {
        return Err(Error::InvalidArgument(format!("amplitude must be >= 0, got {amplitude}")));
    }
    let q = amplitude / 8.0;
    let mut first = Vec::with_capacity(8);
    let mut second = Vec::with_capacity(8);
    for s1 in [-1, 1] {
        for s2 in [-1, 1] {
            for s3 in [-1, 1] {
                let k = WaveVector::new(s1, s2, s3);
                // sin x = (e^{ix} - e^{-ix}) / 2i, cos x = (e^{ix} + e^{-ix}) / 2
                first.push((k, Complex64::new(0.0, -q * f64::from(s1))));
                second.push((k, Complex64::new(0.0, q * f64::from(s2))));
            }
        }
    }
    let mut v = SpectralVectorField::new([
        SpectralScalarField::from_modes(n, first)?,
        SpectralScalarField::from_modes(n, second)?,
        SpectralScalarField::zeros(n, true),
    ])?;
    v.check_solenoidal(0.0);
    Ok(v)
}

/// Seeded random solenoidal, real, zero-mean field with `||v||_{H^1} = target`.
///
/// Coefficients are uniform in the unit square, drawn in lexicographic mode
/// order, projected with `I - k k^T / |k|^2` and conjugate-symmetrised.
pub fn random_solenoidal(seed: u64, target_h1_norm: f64, n: usize) -> Result<SpectralVectorField> {
    if !(target_h1_norm >= 0.0) {
        return Err(Error::InvalidArgument("target norm must be >= 0".into()));
    }
    if target_h1_norm == 0.0 {
        return Ok(SpectralVectorField::zeros(n));
    }
    if n == 0 {
        return Err(Error::InvalidArgument(
            "a nonzero field needs truncation >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut comps = [0, 1, 2].map(|_| SpectralScalarField::zeros(n, false));
    let modes: Vec<WaveVector> = comps[0].modes().map(|(k, _)| k).collect();
    for k in modes {
        let mut c = [Complex64::new(0.0, 0.0); 3];
        for cj in c.iter_mut() {
            *cj = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let kk = k.as_array().map(f64::from);
        let kc = kk[0] * c[0] + kk[1] * c[1] + kk[2] * c[2];
        let k2 = k.norm_e_sq() as f64;
        for j in 0..3 {
            comps[j].set(k, c[j] - kc * (kk[j] / k2))?;
        }
    }
    let v = SpectralVectorField::new(comps.map(|c| c.enforce_reality()))?;
    let norm = v.h1_norm();
    let mut v = v.scale(target_h1_norm / norm);
    v.check_solenoidal(1e-13 * target_h1_norm.max(1.0));
    Ok(v)
}

/// Real scalar field drawn isotropically from the unit sphere of `H^1`:
/// `f_k = g_k / |k|_e` with complex Gaussian `g_k`, symmetrised and normalised.
pub fn random_unit_h1_scalar<R: Rng>(rng: &mut R, n: usize) -> Result<SpectralScalarField> {
    if n == 0 {
        return Err(Error::InvalidArgument("truncation must be >= 1".into()));
    }
    let mut f = SpectralScalarField::zeros(n, false);
    let modes: Vec<WaveVector> = f.modes().map(|(k, _)| k).collect();
    for k in modes {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        f.set(k, Complex64::new(re, im) / k.norm_e())?;
    }
    let f = f.enforce_reality();
    let norm = f.h1_norm();
    Ok(f.scale(1.0 / norm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn taylor_green_coefficients() {
        let v = taylor_green(1.0, 2).unwrap();
        let k = WaveVector::new(1, 1, 1);
        assert!((v.components[0].get(k).norm() - 0.125).abs() < 1e-16);
        assert_eq!(v.components[0].nnz(), 8);
        assert_eq!(v.components[1].nnz(), 8);
        assert_eq!(v.components[2].nnz(), 0);
        assert_eq!(v.divergence_residual(), 0.0);
        assert!(v.is_real());
        // sqrt(16 * (1/8)^2 * 3)
        assert!((v.h1_norm() - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn taylor_green_matches_physical_formula() {
        let v = taylor_green(0.7, 1).unwrap();
        let (x1, x2, x3) = (0.3f64, -1.1f64, 2.0f64);
        let x = [x1, x2, x3].map(|t| Complex64::new(t, 0.0));
        let u = v.components[0].evaluate(x);
        let w = v.components[1].evaluate(x);
        assert!((u.re - 0.7 * x1.sin() * x2.cos() * x3.cos()).abs() < 1e-15);
        assert!((w.re + 0.7 * x1.cos() * x2.sin() * x3.cos()).abs() < 1e-15);
    }

    #[test]
    fn taylor_green_zero_amplitude() {
        let v = taylor_green(0.0, 3).unwrap();
        assert_eq!(v.h1_norm(), 0.0);
    }

    #[test]
    fn random_solenoidal_contract() {
        for seed in [0, 1, 42] {
            let v = random_solenoidal(seed, 0.8, 3).unwrap();
            assert!(v.divergence_residual() <= 1e-13);
            assert!((v.h1_norm() - 0.8).abs() <= 1e-12);
            assert!(v.is_real());
            assert_eq!(v, random_solenoidal(seed, 0.8, 3).unwrap());
        }
        assert_eq!(random_solenoidal(5, 0.0, 3).unwrap().h1_norm(), 0.0);
        assert!(random_solenoidal(5, 1.0, 0).is_err());
        assert_ne!(random_solenoidal(1, 1.0, 2).unwrap(), random_solenoidal(2, 1.0, 2).unwrap());
    }

    #[test]
    fn unit_h1_scalars() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_unit_h1_scalar(&mut rng, 3).unwrap();
        assert!((f.h1_norm() - 1.0).abs() < 1e-14);
        assert!(f.is_real());
    }
}
