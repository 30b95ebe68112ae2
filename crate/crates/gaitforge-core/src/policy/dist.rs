//! Diagonal Gaussian over actions with state-independent log standard
//! deviation.

use rand::Rng;
use rand_distr::StandardNormal;

const LN_2PI: f64 = 1.8378770664093453;

/// Distribution for one decision: mean from the actor head, std shared
/// across states.
#[derive(Debug, Clone)]
pub struct ActionDistribution {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ActionDistribution {
    pub fn new(mean: Vec<f64>, log_std: &[f64]) -> Self {
        assert_eq!(mean.len(), log_std.len());
        let std = log_std.iter().map(|s| s.exp()).collect();
        ActionDistribution { mean, std }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.std)
            .map(|(m, s)| {
                let z: f64 = rng.sample(StandardNormal);
                m + s * z
            })
            .collect()
    }

    /// Mean action, used for deterministic evaluation.
    pub fn mode(&self) -> Vec<f64> {
        self.mean.clone()
    }

    pub fn log_prob(&self, action: &[f64]) -> f64 {
        assert_eq!(action.len(), self.mean.len());
        let mut lp = 0.0;
        for ((a, m), s) in action.iter().zip(&self.mean).zip(&self.std) {
            let z = (a - m) / s;
            lp += -0.5 * z * z - s.ln() - 0.5 * LN_2PI;
        }
        lp
    }

    /// Differential entropy: sum of 0.5 * ln(2 pi e sigma^2) per dimension.
    pub fn entropy(&self) -> f64 {
        self.std
            .iter()
            .map(|s| 0.5 * (LN_2PI + 1.0) + s.ln())
            .sum()
    }

    /// d log_prob / d mean for each dimension, at a fixed action.
    pub fn dlogp_dmean(&self, action: &[f64]) -> Vec<f64> {
        action
            .iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((a, m), s)| (a - m) / (s * s))
            .collect()
    }

    /// d log_prob / d log_std for each dimension, at a fixed action.
    pub fn dlogp_dlogstd(&self, action: &[f64]) -> Vec<f64> {
        action
            .iter()
            .zip(&self.mean)
            .zip(&self.std)
            .map(|((a, m), s)| {
                let z = (a - m) / s;
                z * z - 1.0
            })
            .collect()
    }
}
