//! Plasticity-coupled bucket sampling and fixed curriculum presets.
//!
//! Training data is split into perplexity buckets, bucket 1 being the
//! easiest and closest to the original pretraining distribution (the
//! anchor). At each step the sampling distribution over buckets is a
//! reweighted softmax of the configured target weights, where the anchor
//! bucket receives a boost that grows as the plasticity coefficient
//! `alpha` falls:
//!
//! ```text
//! P_i(alpha) = w_i * exp(lambda * [i == 1] * (1 - alpha)) / sum_j (...)
//! ```
//!
//! At `alpha = 1` (full learning rate) the target weights apply unchanged;
//! at `alpha = 0` the anchor dominates, shielding fragile parameters from
//! distribution shift. `lambda` controls how hard the boost saturates.
//!
//! Fixed curriculum presets (static mixture, ascending, descending, and a
//! two-stage hybrid) are provided for comparison runs; the simulator in
//! [`crate::sim`] accepts either form through [`MixturePolicy`].

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Default anchor boost strength.
pub const DEFAULT_LAMBDA: f64 = 5.0;

/// Default target mixture over (anchor, mid, high) buckets.
pub const DEFAULT_TARGET_WEIGHTS: [f64; 3] = [0.2, 0.4, 0.4];

/// One sampling bucket: an index (1-based, 1 = anchor), a display name and
/// the ids of the records it holds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BucketSpec {
    pub index: usize,
    pub name: String,
    pub records: Vec<String>,
}

/// Plasticity-adjusted sampling parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PasConfig {
    /// Anchor boost strength, `>= 0`.
    pub lambda: f64,
    /// Steady-state mixture weights, bucket 1 first. Positive; normalized
    /// on validation.
    pub target_weights: Vec<f64>,
}

impl Default for PasConfig {
    fn default() -> Self {
        PasConfig {
            lambda: DEFAULT_LAMBDA,
            target_weights: DEFAULT_TARGET_WEIGHTS.to_vec(),
        }
    }
}

impl PasConfig {
    /// Checks ranges and normalizes the target weights to sum to 1.
    pub fn validated(mut self) -> Result<Self> {
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::config("sampler.lambda", "must be finite and >= 0"));
        }
        if self.target_weights.is_empty() {
            return Err(Error::config("sampler.target_weights", "must be non-empty"));
        }
        if self
            .target_weights
            .iter()
            .any(|w| !(w.is_finite() && *w > 0.0))
        {
            return Err(Error::config(
                "sampler.target_weights",
                "every weight must be finite and > 0",
            ));
        }
        let sum: f64 = self.target_weights.iter().sum();
        for w in &mut self.target_weights {
            *w /= sum;
        }
        Ok(self)
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && (0.0..=1.0).contains(&alpha)) {
        return Err(Error::config("alpha", "must lie in [0, 1]"));
    }
    Ok(())
}

/// Sampling distribution over buckets at plasticity `alpha`.
///
/// The boosted softmax is evaluated with the maximum exponent factored
/// out, so the anchor numerator is exactly `w_1` and large `lambda`
/// cannot overflow. Probabilities are positive and sum to 1; non-anchor
/// probabilities keep the ratios of their target weights.
pub fn bucket_probs(cfg: &PasConfig, alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let cfg = cfg.clone().validated()?;
    let boost = cfg.lambda * (1.0 - alpha);
    let damp = (-boost).exp();
    let numers: Vec<f64> = cfg
        .target_weights
        .iter()
        .enumerate()
        .map(|(i, &w)| if i == 0 { w } else { w * damp })
        .collect();
    let denom: f64 = numers.iter().sum();
    Ok(numers.into_iter().map(|n| n / denom).collect())
}

/// Draws `batch_size` record ids with replacement: a bucket per `probs`,
/// then a uniform record within it.
///
/// Errors if a bucket with positive probability holds no records, or if
/// `probs` does not match `buckets` in length.
pub fn draw_batch<R: Rng>(
    buckets: &[BucketSpec],
    probs: &[f64],
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<String>> {
    if buckets.len() != probs.len() {
        return Err(Error::InvalidInput(format!(
            "{} buckets but {} probabilities",
            buckets.len(),
            probs.len()
        )));
    }
    for (b, &p) in buckets.iter().zip(probs) {
        if p > 0.0 && b.records.is_empty() {
            return Err(Error::InvalidInput(format!(
                "bucket {} ({}) has probability {p} but no records",
                b.index, b.name
            )));
        }
    }
    let dist = WeightedIndex::new(probs)
        .map_err(|e| Error::InvalidInput(format!("bad bucket probabilities: {e}")))?;
    let mut out = Vec::with_capacity(batch_size);
    for _ in 0..batch_size {
        let b = &buckets[dist.sample(rng)];
        let r = &b.records[rng.gen_range(0..b.records.len())];
        out.push(r.clone());
    }
    Ok(out)
}

/// Which curriculum a preset encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetKind {
    /// Constant (0.3, 0.4, 0.3) mixture.
    StaticMixture,
    /// Thirds of the run on buckets 1, then 2, then 3.
    Ascending,
    /// Thirds of the run on buckets 3, then 2, then 1.
    Descending,
    /// First 10% purely on the anchor, then a fixed (2, 4, 3)/9 blend.
    TwoStageHybrid,
    /// Plasticity-adjusted sampling; not a fixed preset (use [`PasConfig`]).
    Pas,
}

/// One curriculum phase: mixture applies to steps in `[start, end)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub start: u64,
    pub end: u64,
    pub mixture: Vec<f64>,
}

/// A piecewise-constant mixture schedule over `[0, total_steps]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchedulePreset {
    pub kind: PresetKind,
    pub total_steps: u64,
    pub phases: Vec<Phase>,
}

fn one_hot(k: usize) -> Vec<f64> {
    let mut m = vec![0.0; 3];
    m[k] = 1.0;
    m
}

/// Builds one of the fixed three-bucket presets over `[0, total_steps]`.
///
/// `PresetKind::Pas` is not a fixed mixture and is rejected here; route it
/// through [`MixturePolicy::Pas`] instead.
pub fn schedule_preset(kind: PresetKind, total_steps: u64) -> Result<SchedulePreset> {
    if total_steps == 0 {
        return Err(Error::config("preset.total_steps", "must be >= 1"));
    }
    let end = total_steps + 1;
    let phases = match kind {
        PresetKind::StaticMixture => vec![Phase {
            start: 0,
            end,
            mixture: vec![0.3, 0.4, 0.3],
        }],
        PresetKind::Ascending | PresetKind::Descending => {
            let b1 = (total_steps as f64 / 3.0).round() as u64;
            let b2 = (2.0 * total_steps as f64 / 3.0).round() as u64;
            let order: [usize; 3] = match kind {
                PresetKind::Ascending => [0, 1, 2],
                _ => [2, 1, 0],
            };
            vec![
                Phase {
                    start: 0,
                    end: b1,
                    mixture: one_hot(order[0]),
                },
                Phase {
                    start: b1,
                    end: b2,
                    mixture: one_hot(order[1]),
                },
                Phase {
                    start: b2,
                    end,
                    mixture: one_hot(order[2]),
                },
            ]
        }
        PresetKind::TwoStageHybrid => {
            let b = (0.1 * total_steps as f64).round() as u64;
            vec![
                Phase {
                    start: 0,
                    end: b,
                    mixture: vec![1.0, 0.0, 0.0],
                },
                Phase {
                    start: b,
                    end,
                    mixture: vec![2.0 / 9.0, 4.0 / 9.0, 3.0 / 9.0],
                },
            ]
        }
        PresetKind::Pas => {
            return Err(Error::config(
                "preset.kind",
                "pas is not a fixed preset; configure the sampler instead",
            ))
        }
    };
    Ok(SchedulePreset {
        kind,
        total_steps,
        phases,
    })
}

impl SchedulePreset {
    /// Mixture in force at step `t`.
    pub fn mixture_at(&self, t: u64) -> Result<&[f64]> {
        self.phases
            .iter()
            .find(|p| t >= p.start && t < p.end)
            .map(|p| p.mixture.as_slice())
            .ok_or(Error::OutOfRange {
                what: "step",
                value: t,
                min: 0,
                max: self.total_steps,
            })
    }
}

/// How the simulator picks a bucket each step: a fixed preset, or the
/// plasticity-adjusted distribution recomputed from the current `alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MixturePolicy {
    Preset(SchedulePreset),
    Pas(PasConfig),
}

impl MixturePolicy {
    pub fn mixture_at(&self, t: u64, alpha: f64) -> Result<Vec<f64>> {
        match self {
            MixturePolicy::Preset(p) => Ok(p.mixture_at(t)?.to_vec()),
            MixturePolicy::Pas(cfg) => bucket_probs(cfg, alpha),
        }
    }
}
