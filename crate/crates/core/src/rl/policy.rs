//! Squashed Gaussian policy over a box of actions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Orientation, RotationBox};
use crate::numerics::RngStream;

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Keeps `log(1 - tanh^2)` finite at saturation.
pub const SQUASH_EPS: f64 = 1e-6;

const HALF_LOG_TAU: f64 = 0.918_938_533_204_672_8;

/// Axis-aligned action bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ActionBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::DimensionMismatch("action bounds".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l.is_finite() && u.is_finite() && l < u)) {
            return Err(Error::InvalidArgument("action bounds must be finite and ordered".into()));
        }
        Ok(Self { lower, upper })
    }

    /// `(alpha, beta)` box of the RIS rotation.
    pub fn rotation(b: &RotationBox) -> Self {
        Self {
            lower: b.lower().to_vec(),
            upper: b.upper().to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    fn half_width(&self, k: usize) -> f64 {
        0.5 * (self.upper[k] - self.lower[k])
    }

    /// Maps `[-1, 1]` coordinates into the box.
    pub fn from_unit(&self, t: &[f64]) -> Vec<f64> {
        t.iter()
            .enumerate()
            .map(|(k, t)| {
                let a = self.lower[k] + (t + 1.0) * self.half_width(k);
                a.clamp(self.lower[k], self.upper[k])
            })
            .collect()
    }

    pub fn to_unit(&self, a: &[f64]) -> Vec<f64> {
        a.iter()
            .enumerate()
            .map(|(k, a)| ((a - self.lower[k]) / self.half_width(k) - 1.0).clamp(-1.0, 1.0))
            .collect()
    }

    pub fn contains(&self, a: &[f64]) -> bool {
        a.iter().enumerate().all(|(k, a)| *a >= self.lower[k] && *a <= self.upper[k])
    }

    pub fn uniform(&self, rng: &mut RngStream) -> Vec<f64> {
        (0..self.dim()).map(|k| rng.uniform_in(self.lower[k], self.upper[k])).collect()
    }

    fn log_jacobian(&self) -> f64 {
        (0..self.dim()).map(|k| self.half_width(k).ln()).sum()
    }
}

/// Reads a 2-D action as an RIS orientation.
pub fn orientation_of(action: &[f64]) -> Orientation {
    Orientation {
        alpha: action[0],
        beta: action[1],
    }
}

/// One draw from the policy, kept with the pieces its gradient needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SquashedSample {
    /// Action inside the box.
    pub action: Vec<f64>,
    /// `tanh(mean + std * z)`, the action in `[-1, 1]` coordinates.
    pub unit: Vec<f64>,
    pub noise: Vec<f64>,
    pub log_prob: f64,
}

/// Log-density of the box action whose pre-squash value is `mean + std * z`.
pub fn squashed_log_prob(log_std: &[f64], noise: &[f64], unit: &[f64], bounds: &ActionBox) -> f64 {
    let mut lp = -bounds.log_jacobian();
    for k in 0..unit.len() {
        lp -= 0.5 * noise[k] * noise[k] + log_std[k] + HALF_LOG_TAU;
        lp -= (1.0 - unit[k] * unit[k] + SQUASH_EPS).ln();
    }
    lp
}

/// Samples `affine(tanh(mean + exp(log_std) z))`. `log_std` is clamped to
/// `[LOG_STD_MIN, LOG_STD_MAX]`.
pub fn squashed_gaussian_sample(mean: &[f64], log_std: &[f64], bounds: &ActionBox, rng: &mut RngStream) -> SquashedSample {
    let noise: Vec<f64> = (0..mean.len()).map(|_| rng.gaussian()).collect();
    squash(mean, log_std, noise, bounds)
}

pub(crate) fn squash(mean: &[f64], log_std: &[f64], noise: Vec<f64>, bounds: &ActionBox) -> SquashedSample {
    let log_std: Vec<f64> = log_std.iter().map(|l| l.clamp(LOG_STD_MIN, LOG_STD_MAX)).collect();
    let unit: Vec<f64> = (0..mean.len())
        .map(|k| (mean[k] + log_std[k].exp() * noise[k]).tanh())
        .collect();
    let log_prob = squashed_log_prob(&log_std, &noise, &unit, bounds);
    SquashedSample {
        action: bounds.from_unit(&unit),
        unit,
        noise,
        log_prob,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::seeded_rng;

    #[test]
    fn zero_std_is_deterministic() {
        let b = ActionBox::new(vec![-2.0, 0.0], vec![0.0, 1.0]).unwrap();
        let mut rng = seeded_rng(1);
        let s = squashed_gaussian_sample(&[0.3, -0.7], &[LOG_STD_MIN, LOG_STD_MIN], &b, &mut rng);
        let expect = b.from_unit(&[0.3f64.tanh(), (-0.7f64).tanh()]);
        assert!((s.action[0] - expect[0]).abs() < 1e-8 && (s.action[1] - expect[1]).abs() < 1e-8);
    }

    #[test]
    fn unit_round_trip() {
        let b = ActionBox::new(vec![-1.4, 1.5], vec![0.0, 2.6]).unwrap();
        let a = vec![-0.3, 2.0];
        let back = b.from_unit(&b.to_unit(&a));
        assert!((back[0] - a[0]).abs() < 1e-12 && (back[1] - a[1]).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_bounds() {
        assert!(ActionBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(ActionBox::new(vec![0.0], vec![f64::NAN]).is_err());
        assert!(ActionBox::new(vec![0.0, 1.0], vec![1.0]).is_err());
    }
}
