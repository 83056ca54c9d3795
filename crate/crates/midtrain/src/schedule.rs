//! Warmup-stable-decay learning-rate schedule and the plasticity coefficient.
//!
//! The schedule has three phases over `[0, total_steps]`:
//!
//! - warmup: linear ramp from zero to `peak_lr` over `warmup_steps`;
//! - stable: flat at `peak_lr`;
//! - decay: anneal from `peak_lr` down to `min_lr`, linear by default or
//!   cosine-shaped.
//!
//! The plasticity coefficient is the current learning rate normalized by the
//! peak, `alpha(t) = lr(t) / peak_lr`, always in `[0, 1]`. It feeds the
//! anchor boost in [`crate::sampling`]: early in a resumed run the model is
//! fragile and sampling leans on anchor data, while at full learning rate
//! the configured target mixture applies. When `freeze_after_stable` is set
//! the coefficient stays pinned at 1 through the decay phase, so mixture
//! policy and annealing can be decoupled.
//!
//! Phase boundary values are exact: `lr_at(warmup_steps)` is `peak_lr` and
//! `lr_at(total_steps)` is `min_lr`, bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Shape of the decay phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayShape {
    #[default]
    Linear,
    Cosine,
}

/// Warmup-stable-decay schedule over discrete steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WsdSchedule {
    pub warmup_steps: u64,
    pub stable_steps: u64,
    pub decay_steps: u64,
    pub peak_lr: f64,
    pub min_lr: f64,
    pub decay_shape: DecayShape,
    /// Pin the plasticity coefficient at 1 once the stable phase ends.
    pub freeze_after_stable: bool,
}

impl Default for WsdSchedule {
    fn default() -> Self {
        WsdSchedule {
            warmup_steps: 2_000,
            stable_steps: 16_000,
            decay_steps: 2_000,
            peak_lr: 3e-4,
            min_lr: 3e-6,
            decay_shape: DecayShape::Linear,
            freeze_after_stable: false,
        }
    }
}

impl WsdSchedule {
    /// Validates field ranges; call after constructing from config.
    pub fn validate(&self) -> Result<()> {
        if !(self.peak_lr.is_finite() && self.peak_lr > 0.0) {
            return Err(Error::config("schedule.peak_lr", "must be finite and > 0"));
        }
        if !(self.min_lr.is_finite() && self.min_lr > 0.0) {
            return Err(Error::config("schedule.min_lr", "must be finite and > 0"));
        }
        if self.min_lr > self.peak_lr {
            return Err(Error::config("schedule.min_lr", "must not exceed peak_lr"));
        }
        if self.total_steps() == 0 {
            return Err(Error::config(
                "schedule.warmup_steps",
                "schedule must span at least one step",
            ));
        }
        Ok(())
    }

    /// Last valid step index; the schedule is defined on `[0, total_steps]`.
    pub fn total_steps(&self) -> u64 {
        self.warmup_steps + self.stable_steps + self.decay_steps
    }

    fn check_step(&self, t: u64) -> Result<()> {
        let total = self.total_steps();
        if t > total {
            return Err(Error::OutOfRange {
                what: "step",
                value: t,
                min: 0,
                max: total,
            });
        }
        Ok(())
    }

    /// Learning rate at step `t`.
    ///
    /// Errors if `t` lies beyond `total_steps`.
    pub fn lr_at(&self, t: u64) -> Result<f64> {
        self.check_step(t)?;
        let stable_end = self.warmup_steps + self.stable_steps;
        if t < self.warmup_steps {
            return Ok(t as f64 / self.warmup_steps as f64 * self.peak_lr);
        }
        if t <= stable_end {
            return Ok(self.peak_lr);
        }
        let f = (t - stable_end) as f64 / self.decay_steps as f64;
        Ok(self.decay_lr(f))
    }

    /// Decay-phase value at fraction `f` in `[0, 1]` of the decay span.
    ///
    /// Both shapes are written as interpolations so that `f = 0` returns
    /// `peak_lr` exactly and `f = 1` returns `min_lr` exactly.
    fn decay_lr(&self, f: f64) -> f64 {
        let s = match self.decay_shape {
            DecayShape::Linear => 1.0 - f,
            DecayShape::Cosine => (1.0 + (std::f64::consts::PI * f).cos()) / 2.0,
        };
        s * self.peak_lr + (1.0 - s) * self.min_lr
    }

    /// Plasticity coefficient at step `t`: the learning rate as a fraction
    /// of peak, in `[0, 1]`.
    pub fn plasticity_at(&self, t: u64) -> Result<f64> {
        self.check_step(t)?;
        if self.freeze_after_stable && t > self.warmup_steps + self.stable_steps {
            return Ok(1.0);
        }
        let alpha = self.lr_at(t)? / self.peak_lr;
        Ok(alpha.clamp(0.0, 1.0))
    }
}
