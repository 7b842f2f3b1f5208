use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How to lay out checkpoints on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// First step as a fraction of `T`.
    pub first_step_fraction: f64,
    /// Growth factor between consecutive steps near `t = 0`.
    pub ratio: f64,
    /// Cap on any step, as a fraction of `T`.
    pub max_step_fraction: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            first_step_fraction: 1e-5,
            ratio: 1.1,
            max_step_fraction: 1e-2,
        }
    }
}

/// Strictly increasing checkpoints starting at 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn from_times(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidGrid("grid must start at t = 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("grid must be strictly increasing".into()));
        }
        Ok(Self { times })
    }

    /// Geometric refinement towards `t = 0`, then steps capped at
    /// `max_step_fraction * T`. The last step is stretched rather than
    /// leaving a sliver shorter than half the previous one.
    pub fn build(horizon: f64, spec: &GridSpec) -> Result<Self> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidGrid(format!("horizon must be positive, got {horizon}")));
        }
        if !(spec.first_step_fraction > 0.0)
            || !(spec.ratio >= 1.0)
            || !(spec.max_step_fraction > 0.0)
        {
            return Err(Error::InvalidGrid(format!("bad grid spec {spec:?}")));
        }
        let max_step = spec.max_step_fraction * horizon;
        let mut step = (spec.first_step_fraction * horizon).min(max_step);
        let mut times = vec![0.0];
        let mut t = 0.0;
        loop {
            let next = t + step;
            if next >= horizon * (1.0 - 1e-12) || horizon - next < 0.5 * step {
                times.push(horizon);
                break;
            }
            times.push(next);
            t = next;
            step = (step * spec.ratio).min(max_step);
        }
        Self::from_times(times)
    }

    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if steps == 0 || !(horizon > 0.0) {
            return Err(Error::InvalidGrid("uniform grid needs steps > 0 and T > 0".into()));
        }
        Self::from_times((0..=steps).map(|i| horizon * i as f64 / steps as f64).collect())
    }

    /// Inserts the midpoint of every interval.
    pub fn refine(&self) -> Self {
        let mut times = Vec::with_capacity(2 * self.times.len() - 1);
        for w in self.times.windows(2) {
            times.push(w[0]);
            times.push(0.5 * (w[0] + w[1]));
        }
        times.push(*self.times.last().unwrap());
        Self { times }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn max_step(&self) -> f64 {
        self.times
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_grid_shape() {
        let g = TimeGrid::build(0.5, &GridSpec::default()).unwrap();
        let t = g.times();
        assert_eq!(t[0], 0.0);
        assert_eq!(g.horizon(), 0.5);
        assert!((t[1] - 5e-6).abs() < 1e-18);
        assert!((t[2] - t[1] - 5.5e-6).abs() < 1e-15);
        assert!(g.max_step() <= 0.5 * 1e-2 * 1.5 + 1e-15);
        assert!(t.iter().filter(|&&x| x > 0.0 && x < 0.005).count() >= 3);
    }

    #[test]
    fn refine_halves_steps() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        let r = g.refine();
        assert_eq!(r.times(), &[0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::from_times(vec![]).is_err());
        assert!(TimeGrid::from_times(vec![0.1, 0.2]).is_err());
        assert!(TimeGrid::from_times(vec![0.0, 0.2, 0.2]).is_err());
        assert!(TimeGrid::build(-1.0, &GridSpec::default()).is_err());
    }
}
