//! Synthetic continual-training task.
//!
//! Three data strata share a linear teacher structure but differ in input
//! curvature (variance along the first coordinate), teacher weight on that
//! coordinate, and label noise. The strata are ordered by difficulty: a
//! fixed reference model's expected loss rises strictly from stratum 1 to
//! stratum 3, the same ordering a perplexity bucketizer would produce.
//!
//! The "original" distribution plays the role of earlier training data:
//! its teacher is the zero vector, so a model that drifts along the first
//! coordinate while chasing stratum teachers pays for it on the original
//! evaluation set. The opposing mid and high teachers are balanced so a
//! blended data mixture has an optimum near the original teacher, while a
//! curriculum that visits the high stratum alone converges somewhere the
//! original set punishes.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::sim::model::Batch;
use crate::Result;

/// One data stratum of the synthetic task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Stratum {
    pub name: String,
    /// Variance added to the first input coordinate on top of the base.
    pub extra_curvature: f64,
    /// Teacher weight on the first coordinate; other coordinates are 0.
    pub teacher: f64,
    /// Label noise standard deviation.
    pub noise_sigma: f64,
}

/// The full task: three strata plus the original distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticTask {
    pub dim: usize,
    /// Base input variance shared by every coordinate and stratum.
    pub base_curvature: f64,
    pub strata: Vec<Stratum>,
    /// Label noise of the original distribution (zero teacher).
    pub original_sigma: f64,
}

impl Default for SyntheticTask {
    fn default() -> Self {
        SyntheticTask {
            dim: 8,
            base_curvature: 0.6,
            strata: vec![
                Stratum {
                    name: "low".into(),
                    extra_curvature: 0.0,
                    teacher: 0.1,
                    noise_sigma: 0.3,
                },
                Stratum {
                    name: "mid".into(),
                    extra_curvature: 3.0,
                    teacher: 2.0,
                    noise_sigma: 1.0,
                },
                Stratum {
                    name: "high".into(),
                    extra_curvature: 16.0,
                    teacher: -0.5,
                    noise_sigma: 6.0,
                },
            ],
            original_sigma: 0.3,
        }
    }
}

impl SyntheticTask {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::config("task.dim", "must be at least 1"));
        }
        if !(self.base_curvature.is_finite() && self.base_curvature > 0.0) {
            return Err(Error::config("task.base_curvature", "must be > 0"));
        }
        if self.strata.is_empty() {
            return Err(Error::config("task.strata", "need at least one stratum"));
        }
        for s in &self.strata {
            if !(s.extra_curvature.is_finite() && s.extra_curvature >= 0.0) {
                return Err(Error::config(
                    "task.strata.extra_curvature",
                    format!("stratum {}: must be >= 0", s.name),
                ));
            }
            if !s.teacher.is_finite() {
                return Err(Error::config(
                    "task.strata.teacher",
                    format!("stratum {}: must be finite", s.name),
                ));
            }
            if !(s.noise_sigma.is_finite() && s.noise_sigma >= 0.0) {
                return Err(Error::config(
                    "task.strata.noise_sigma",
                    format!("stratum {}: must be >= 0", s.name),
                ));
            }
        }
        if !(self.original_sigma.is_finite() && self.original_sigma >= 0.0) {
            return Err(Error::config("task.original_sigma", "must be >= 0"));
        }
        let losses = self.reference_losses();
        if losses.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(
                "task.strata",
                format!("reference losses must rise strictly with the stratum index, got {losses:?}"),
            ));
        }
        Ok(())
    }

    /// Expected loss of the all-zeros reference model on each stratum:
    /// (teacher^2 * first-coordinate variance + noise^2) / 2. This is the
    /// difficulty score that orders the strata.
    pub fn reference_losses(&self) -> Vec<f64> {
        self.strata
            .iter()
            .map(|s| {
                let var1 = self.base_curvature + s.extra_curvature;
                0.5 * (s.teacher * s.teacher * var1 + s.noise_sigma * s.noise_sigma)
            })
            .collect()
    }

    fn sample_x(&self, extra: f64, rng: &mut impl Rng) -> Vec<f64> {
        (0..self.dim)
            .map(|j| {
                let var = if j == 0 {
                    self.base_curvature + extra
                } else {
                    self.base_curvature
                };
                let z: f64 = rng.sample(StandardNormal);
                z * var.sqrt()
            })
            .collect()
    }

    /// Draws one batch from the given stratum.
    pub fn sample_stratum(
        &self,
        stratum: usize,
        batch_size: usize,
        rng: &mut impl Rng,
    ) -> Result<Batch> {
        let s = self.strata.get(stratum).ok_or_else(|| {
            Error::InvalidInput(format!(
                "stratum index {stratum} out of range ({} strata)",
                self.strata.len()
            ))
        })?;
        if batch_size == 0 {
            return Err(Error::InvalidInput("batch_size must be >= 1".into()));
        }
        let mut xs = Vec::with_capacity(batch_size);
        let mut ys = Vec::with_capacity(batch_size);
        for _ in 0..batch_size {
            let x = self.sample_x(s.extra_curvature, rng);
            let noise: f64 = rng.sample(StandardNormal);
            ys.push(s.teacher * x[0] + s.noise_sigma * noise);
            xs.push(x);
        }
        Ok(Batch { xs, ys })
    }

    /// Draws one batch whose rows are assigned to strata by the mixture
    /// probabilities.
    pub fn sample_mixture(
        &self,
        probs: &[f64],
        batch_size: usize,
        rng: &mut impl Rng,
    ) -> Result<Batch> {
        if probs.len() != self.strata.len() {
            return Err(Error::InvalidInput(format!(
                "{} mixture probabilities for {} strata",
                probs.len(),
                self.strata.len()
            )));
        }
        if batch_size == 0 {
            return Err(Error::InvalidInput("batch_size must be >= 1".into()));
        }
        let mut xs = Vec::with_capacity(batch_size);
        let mut ys = Vec::with_capacity(batch_size);
        for _ in 0..batch_size {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut idx = self.strata.len() - 1;
            for (k, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    idx = k;
                    break;
                }
            }
            let s = &self.strata[idx];
            let x = self.sample_x(s.extra_curvature, rng);
            let noise: f64 = rng.sample(StandardNormal);
            ys.push(s.teacher * x[0] + s.noise_sigma * noise);
            xs.push(x);
        }
        Ok(Batch { xs, ys })
    }

    /// Draws from the original (pre-training) distribution: zero teacher,
    /// base curvature everywhere.
    pub fn sample_original(&self, n: usize, rng: &mut impl Rng) -> Result<Batch> {
        if n == 0 {
            return Err(Error::InvalidInput("sample count must be >= 1".into()));
        }
        let mut xs = Vec::with_capacity(n);
        let mut ys = Vec::with_capacity(n);
        for _ in 0..n {
            xs.push(self.sample_x(0.0, rng));
            let noise: f64 = rng.sample(StandardNormal);
            ys.push(self.original_sigma * noise);
        }
        Ok(Batch { xs, ys })
    }
}
