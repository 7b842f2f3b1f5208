//! Lattice points of the dual torus and their three norms.

use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde::{Deserialize, Serialize};

/// A point `k = (k1, k2, k3)` of the integer lattice `Z^3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WaveVector {
    pub k1: i32,
    pub k2: i32,
    pub k3: i32,
}

impl WaveVector {
    pub const ZERO: WaveVector = WaveVector { k1: 0, k2: 0, k3: 0 };

    pub const fn new(k1: i32, k2: i32, k3: i32) -> Self {
        Self { k1, k2, k3 }
    }

    pub fn from_array(k: [i32; 3]) -> Self {
        Self::new(k[0], k[1], k[2])
    }

    pub fn as_array(&self) -> [i32; 3] {
        [self.k1, self.k2, self.k3]
    }

    /// Component `j` in `0..3`.
    pub fn component(&self, j: usize) -> i32 {
        self.as_array()[j]
    }

    pub fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }

    /// `|k| = |k1| + |k2| + |k3|`.
    pub fn norm_l1(&self) -> u32 {
        self.k1.unsigned_abs() + self.k2.unsigned_abs() + self.k3.unsigned_abs()
    }

    /// `|k|_e^2`, exact in integers.
    pub fn norm_e_sq(&self) -> i64 {
        let [a, b, c] = self.as_array().map(i64::from);
        a * a + b * b + c * c
    }

    /// Euclidean norm `|k|_e`.
    pub fn norm_e(&self) -> f64 {
        (self.norm_e_sq() as f64).sqrt()
    }

    /// `|k|_m = max_j |k_j|`.
    pub fn norm_max(&self) -> u32 {
        self.k1
            .unsigned_abs()
            .max(self.k2.unsigned_abs())
            .max(self.k3.unsigned_abs())
    }

    pub fn dot(&self, other: &WaveVector) -> i64 {
        self.as_array()
            .iter()
            .zip(other.as_array().iter())
            .map(|(&a, &b)| i64::from(a) * i64::from(b))
            .sum()
    }
}

impl Add for WaveVector {
    type Output = WaveVector;
    fn add(self, o: WaveVector) -> WaveVector {
        WaveVector::new(self.k1 + o.k1, self.k2 + o.k2, self.k3 + o.k3)
    }
}

impl Sub for WaveVector {
    type Output = WaveVector;
    fn sub(self, o: WaveVector) -> WaveVector {
        WaveVector::new(self.k1 - o.k1, self.k2 - o.k2, self.k3 - o.k3)
    }
}

impl Neg for WaveVector {
    type Output = WaveVector;
    fn neg(self) -> WaveVector {
        WaveVector::new(-self.k1, -self.k2, -self.k3)
    }
}

impl fmt::Display for WaveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.k1, self.k2, self.k3)
    }
}
