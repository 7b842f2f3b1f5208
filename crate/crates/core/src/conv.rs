//! Galerkin-truncated products of spectral fields.
//!
//! Two routes compute `h_k = sum_{m+n=k} f_m g_n` on `0 < |k|_m <= N`:
//! a direct sum over the nonzero supports, and a transform route that
//! embeds both fields in an `M^3` grid with `M >= 3N + 1` (the 3/2 rule
//! for a `2N + 1` band), multiplies pointwise and transforms back. With
//! that padding every alias of a product mode `|k|_m <= 2N` lands outside
//! the retained band, so the two routes agree up to rounding.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{SpectralScalarField, SpectralVectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConvolutionPath {
    Direct,
    Transform,
    /// Direct when the supports are sparse enough to beat the transform.
    #[default]
    Auto,
}

/// Direct O(nnz(f) * nnz(g)) convolution with Galerkin truncation.
pub fn direct_product(
    f: &SpectralScalarField,
    g: &SpectralScalarField,
) -> Result<SpectralScalarField> {
    check(f, g)?;
    let n = f.truncation();
    let mut out = SpectralScalarField::zeros(n, false);
    let gs: Vec<_> = g.support().collect();
    for (m, fm) in f.support() {
        for &(q, gq) in &gs {
            let k = m + q;
            if k.is_zero() || k.norm_max() as usize > n {
                continue;
            }
            let prev = out.get(k);
            out.set(k, prev + fm * gq)?;
        }
    }
    Ok(finish(out, f.is_real() && g.is_real()))
}

fn check(f: &SpectralScalarField, g: &SpectralScalarField) -> Result<()> {
    if f.truncation() != g.truncation() {
        return Err(Error::TruncationMismatch {
            left: f.truncation(),
            right: g.truncation(),
        });
    }
    Ok(())
}

fn finish(out: SpectralScalarField, real: bool) -> SpectralScalarField {
    if real {
        out.enforce_reality()
    } else {
        let mut out = out;
        out.set_real_flag(false);
        out
    }
}

/// Smallest `M >= min` whose prime factors are 2, 3 or 5.
fn smooth_size(min: usize) -> usize {
    (min.max(1)..)
        .find(|&m| {
            let mut r = m;
            for p in [2, 3, 5] {
                while r % p == 0 {
                    r /= p;
                }
            }
            r == 1
        })
        .unwrap()
}

/// Product engine for one truncation; caches FFT plans.
#[derive(Clone)]
pub struct Convolver {
    n: usize,
    m: usize,
    path: ConvolutionPath,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Convolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Convolver")
            .field("n", &self.n)
            .field("m", &self.m)
            .field("path", &self.path)
            .finish()
    }
}

impl Convolver {
    pub fn new(n: usize, path: ConvolutionPath) -> Self {
        let m = smooth_size(3 * n + 1);
        let mut planner = FftPlanner::new();
        Self {
            n,
            m,
            path,
            forward: planner.plan_fft(m, FftDirection::Forward),
            inverse: planner.plan_fft(m, FftDirection::Inverse),
        }
    }

    pub fn truncation(&self) -> usize {
        self.n
    }

    /// Padded grid size per axis.
    pub fn grid_size(&self) -> usize {
        self.m
    }

    fn use_direct(&self, work: usize) -> bool {
        match self.path {
            ConvolutionPath::Direct => true,
            ConvolutionPath::Transform => false,
            ConvolutionPath::Auto => {
                let m3 = self.m * self.m * self.m;
                // rough flop count of three 3-D transforms
                let fft = 3 * m3 * (3 * (self.m as f64).log2().ceil() as usize + 2);
                work <= fft
            }
        }
    }

    pub fn product(
        &self,
        f: &SpectralScalarField,
        g: &SpectralScalarField,
    ) -> Result<SpectralScalarField> {
        check(f, g)?;
        if f.truncation() != self.n {
            return Err(Error::TruncationMismatch {
                left: self.n,
                right: f.truncation(),
            });
        }
        if self.use_direct(f.nnz() * g.nnz()) {
            return direct_product(f, g);
        }
        let pf = self.to_physical(f);
        let pg = self.to_physical(g);
        let prod: Vec<_> = pf.iter().zip(&pg).map(|(a, b)| a * b).collect();
        Ok(finish(self.to_spectral(prod), f.is_real() && g.is_real()))
    }

    /// All products `v^j v^l`, `j <= l`, as a symmetric 3x3 table.
    pub fn pair_products(&self, v: &SpectralVectorField) -> Result<[[SpectralScalarField; 3]; 3]> {
        let [a, b, c] = &v.components;
        if a.truncation() != self.n {
            return Err(Error::TruncationMismatch {
                left: self.n,
                right: a.truncation(),
            });
        }
        let work = a.nnz().max(b.nnz()).max(c.nnz()).pow(2) * 6;
        let real = v.is_real();
        let table: Vec<SpectralScalarField> = if self.use_direct(work) {
            let mut t = Vec::with_capacity(6);
            for j in 0..3 {
                for l in j..3 {
                    t.push(direct_product(&v.components[j], &v.components[l])?);
                }
            }
            t
        } else {
            let phys = [a, b, c].map(|f| self.to_physical(f));
            let mut t = Vec::with_capacity(6);
            for j in 0..3 {
                for l in j..3 {
                    let prod: Vec<_> = phys[j].iter().zip(&phys[l]).map(|(x, y)| x * y).collect();
                    t.push(finish(self.to_spectral(prod), real));
                }
            }
            t
        };
        let at = |j: usize, l: usize| {
            let (j, l) = if j <= l { (j, l) } else { (l, j) };
            // row-major upper triangle: (0,0)(0,1)(0,2)(1,1)(1,2)(2,2)
            let idx = [[0, 1, 2], [1, 3, 4], [2, 4, 5]][j][l];
            table[idx].clone()
        };
        Ok([
            [at(0, 0), at(0, 1), at(0, 2)],
            [at(1, 0), at(1, 1), at(1, 2)],
            [at(2, 0), at(2, 1), at(2, 2)],
        ])
    }

    fn wrap(&self, k: i32) -> usize {
        k.rem_euclid(self.m as i32) as usize
    }

    fn to_physical(&self, f: &SpectralScalarField) -> Vec<Complex64> {
        let m = self.m;
        let mut buf = vec![Complex64::new(0.0, 0.0); m * m * m];
        for (k, c) in f.support() {
            let idx = (self.wrap(k.k1) * m + self.wrap(k.k2)) * m + self.wrap(k.k3);
            buf[idx] = c;
        }
        self.transform(&mut buf, &self.inverse);
        buf
    }

    fn to_spectral(&self, mut buf: Vec<Complex64>) -> SpectralScalarField {
        self.transform(&mut buf, &self.forward);
        let m = self.m;
        let scale = 1.0 / (m * m * m) as f64;
        let mut out = SpectralScalarField::zeros(self.n, false);
        let n = self.n as i32;
        let side = out.side();
        let raw = out.raw_mut();
        for k1 in -n..=n {
            for k2 in -n..=n {
                for k3 in -n..=n {
                    if k1 == 0 && k2 == 0 && k3 == 0 {
                        continue;
                    }
                    let src = (self.wrap(k1) * m + self.wrap(k2)) * m + self.wrap(k3);
                    let dst = (((k1 + n) as usize) * side + (k2 + n) as usize) * side
                        + (k3 + n) as usize;
                    raw[dst] = buf[src] * scale;
                }
            }
        }
        out
    }

    /// In-place unnormalised 3-D transform.
    fn transform(&self, buf: &mut [Complex64], fft: &Arc<dyn Fft<f64>>) {
        let m = self.m;
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        // last axis is contiguous
        fft.process_with_scratch(buf, &mut scratch);
        let mut lines = vec![Complex64::new(0.0, 0.0); m * m * m];
        for stride in [m, m * m] {
            // gather every line along this axis
            let mut l = 0;
            for outer in 0..m {
                for inner in 0..m {
                    let base = if stride == m {
                        outer * m * m + inner
                    } else {
                        outer * m + inner
                    };
                    for t in 0..m {
                        lines[l * m + t] = buf[base + t * stride];
                    }
                    l += 1;
                }
            }
            fft.process_with_scratch(&mut lines, &mut scratch);
            let mut l = 0;
            for outer in 0..m {
                for inner in 0..m {
                    let base = if stride == m {
                        outer * m * m + inner
                    } else {
                        outer * m + inner
                    };
                    for t in 0..m {
                        buf[base + t * stride] = lines[l * m + t];
                    }
                    l += 1;
                }
            }
        }
    }
}

/// Truncated product choosing the route automatically.
pub fn product(f: &SpectralScalarField, g: &SpectralScalarField) -> Result<SpectralScalarField> {
    check(f, g)?;
    Convolver::new(f.truncation(), ConvolutionPath::Auto).product(f, g)
}
