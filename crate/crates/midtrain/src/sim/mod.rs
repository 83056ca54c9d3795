//! Seeded continual-training simulator.
//!
//! Trains a small linear model by SGD on minibatches drawn from the
//! [`task::SyntheticTask`] strata according to a mixture policy, while a
//! learning-rate schedule controls both the step size and (through the
//! plasticity coefficient) the adaptive mixture. Train and validation
//! losses are recorded at a fixed cadence; validation always means the
//! original distribution, so a rising validation column is forgetting.
//!
//! Three RNG streams keep the pieces independent: training draws, eval
//! batch draws, and the fixed validation set. Identical (config, seed)
//! pairs produce bit-identical traces.

pub mod model;
pub mod probes;
pub mod task;

pub use model::{Batch, DiffModel, LinearRegression, LogisticRegression, ModelSpec, Quadratic};
pub use probes::{
    curvature_probe, fidelity_probe, grad_noise_probe, run_probes, CurvatureEstimate,
    FidelityReport, GradNoiseEstimate, ProbeState, StabilityProbe,
};
pub use task::{Stratum, SyntheticTask};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rng::{stream_rng, Stream};
use crate::sampling::MixturePolicy;
use crate::schedule::WsdSchedule;
use crate::Result;

/// Loop knobs that rarely change between runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimOptions {
    /// Training minibatch size.
    pub batch_size: usize,
    /// Size of the fresh mixture batch drawn to measure train loss at
    /// each eval point.
    pub eval_batch_size: usize,
    /// Size of the fixed validation set.
    pub val_size: usize,
    /// Momentum coefficient; `None` is plain SGD.
    pub momentum: Option<f64>,
    /// A loss at or above this value at an eval point truncates the run.
    pub divergence_threshold: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            batch_size: 16,
            eval_batch_size: 256,
            val_size: 256,
            momentum: None,
            divergence_threshold: 1e6,
        }
    }
}

impl SimOptions {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("sim.batch_size", "must be >= 1"));
        }
        if self.eval_batch_size == 0 {
            return Err(Error::config("sim.eval_batch_size", "must be >= 1"));
        }
        if self.val_size == 0 {
            return Err(Error::config("sim.val_size", "must be >= 1"));
        }
        if let Some(m) = self.momentum {
            if !(m.is_finite() && (0.0..1.0).contains(&m)) {
                return Err(Error::config("sim.momentum", "must lie in [0, 1)"));
            }
        }
        if !(self.divergence_threshold.is_finite() && self.divergence_threshold > 0.0) {
            return Err(Error::config(
                "sim.divergence_threshold",
                "must be finite and > 0",
            ));
        }
        Ok(())
    }
}

/// One recorded eval point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: u64,
    pub lr: f64,
    pub alpha: f64,
    pub bucket_probs: Vec<f64>,
    pub train_loss: f64,
    pub val_loss: f64,
}

/// Full record of one simulation: config echo plus the eval rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub seed: u64,
    pub steps: u64,
    pub eval_every: u64,
    pub schedule: WsdSchedule,
    pub policy: MixturePolicy,
    pub options: SimOptions,
    pub rows: Vec<TraceRow>,
    /// True when the run hit a non-finite or above-threshold loss; rows
    /// stop at the last healthy eval point.
    pub diverged: bool,
    pub final_theta: Vec<f64>,
}

/// Runs SGD for `steps` steps, recording at every `eval_every` steps and
/// at the final step.
pub fn run_sim(
    task: &SyntheticTask,
    schedule: &WsdSchedule,
    policy: &MixturePolicy,
    steps: u64,
    eval_every: u64,
    seed: u64,
    options: &SimOptions,
) -> Result<SimTrace> {
    task.validate()?;
    schedule.validate()?;
    options.validate()?;
    if eval_every == 0 {
        return Err(Error::config("sim.eval_every", "must be >= 1"));
    }
    if steps < eval_every {
        return Err(Error::config(
            "sim.steps",
            format!("must be >= eval_every ({eval_every})"),
        ));
    }
    if steps > schedule.total_steps() {
        return Err(Error::config(
            "sim.steps",
            format!(
                "{} steps exceed the schedule span of {}",
                steps,
                schedule.total_steps()
            ),
        ));
    }

    let model = LinearRegression { dim: task.dim };
    let mut theta = vec![0.0; task.dim];
    let mut velocity = vec![0.0; task.dim];

    let mut train_rng = stream_rng(seed, Stream::SimTrain);
    let mut eval_rng = stream_rng(seed, Stream::SimEval);
    let mut val_rng = stream_rng(seed, Stream::Task);
    let val_set = task.sample_original(options.val_size, &mut val_rng)?;

    let mut rows: Vec<TraceRow> = Vec::with_capacity((steps / eval_every + 1) as usize);
    let mut diverged = false;

    for t in 0..=steps {
        if t % eval_every == 0 || t == steps {
            let lr = schedule.lr_at(t)?;
            let alpha = schedule.plasticity_at(t)?;
            let probs = policy.mixture_at(t, alpha)?;
            let eval_batch = task.sample_mixture(&probs, options.eval_batch_size, &mut eval_rng)?;
            let train_loss = model.loss(&theta, &eval_batch)?;
            let val_loss = model.loss(&theta, &val_set)?;
            let healthy = |x: f64| x.is_finite() && x < options.divergence_threshold;
            if !healthy(train_loss) || !healthy(val_loss) {
                diverged = true;
                break;
            }
            rows.push(TraceRow {
                step: t,
                lr,
                alpha,
                bucket_probs: probs,
                train_loss,
                val_loss,
            });
        }
        if t == steps {
            break;
        }

        let lr = schedule.lr_at(t)?;
        let alpha = schedule.plasticity_at(t)?;
        let probs = policy.mixture_at(t, alpha)?;
        let batch = task.sample_mixture(&probs, options.batch_size, &mut train_rng)?;
        let grad = model.grad(&theta, &batch)?;
        match options.momentum {
            Some(mu) => {
                for ((v, g), th) in velocity.iter_mut().zip(&grad).zip(theta.iter_mut()) {
                    *v = mu * *v + g;
                    *th -= lr * *v;
                }
            }
            None => {
                for (th, g) in theta.iter_mut().zip(&grad) {
                    *th -= lr * g;
                }
            }
        }
    }

    Ok(SimTrace {
        seed,
        steps,
        eval_every,
        schedule: schedule.clone(),
        policy: policy.clone(),
        options: options.clone(),
        rows,
        diverged,
        final_theta: theta,
    })
}

/// Forgetting summary of one trace, always relative to the first row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForgettingReport {
    pub initial_val_loss: f64,
    pub peak_val_loss: f64,
    /// Step of the first row attaining the peak.
    pub peak_step: u64,
    /// `max(0, peak - initial)`.
    pub max_rise: f64,
    pub final_val_loss: f64,
    pub diverged: bool,
}

/// Summarizes how far validation loss rose above its starting point.
pub fn forgetting_report(trace: &SimTrace) -> Result<ForgettingReport> {
    let first = trace
        .rows
        .first()
        .ok_or_else(|| Error::InvalidInput("trace has no rows".into()))?;
    let last = trace.rows.last().expect("non-empty by the check above");
    let mut peak = first;
    for row in &trace.rows {
        if row.val_loss > peak.val_loss {
            peak = row;
        }
    }
    Ok(ForgettingReport {
        initial_val_loss: first.val_loss,
        peak_val_loss: peak.val_loss,
        peak_step: peak.step,
        max_rise: (peak.val_loss - first.val_loss).max(0.0),
        final_val_loss: last.val_loss,
        diverged: trace.diverged,
    })
}
