//! Sequence- and token-level baselines for policy-gradient advantages.
//!
//! For a batch of episodes with lengths `L_i` and terminal rewards `R_i`,
//! the sequence baseline is the plain episode mean of rewards and the
//! token baseline is the token-weighted mean `sum(L_i R_i) / sum(L_i)`.
//! The advantage of every token in episode `i` is `R_i - b`, broadcast
//! along the episode.
//!
//! Which baseline to prefer is a variance question. Writing `T = sum(L_i)`
//! for the total token count, the token-weighted advantage second moments
//! under the two baselines obey
//!
//! ```text
//! sum_i L_i (R_i - b_seq)^2 = sum_i L_i (R_i - b_tok)^2 + T (b_tok - b_seq)^2
//! ```
//!
//! so the token baseline never has larger token-weighted variance, and the
//! gap term quantifies exactly what correlation between length and reward
//! costs. [`variance_report`] returns all five quantities;
//! [`stress`] ships batches with strong length-reward correlation in both
//! directions where the gap is large.

pub mod mc;

pub use mc::{mc_unbiasedness_check, trajectory_batch, McCheck, TabularPolicy};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// One scored episode: a token length and a terminal scalar reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub length: u64,
    pub reward: f64,
}

/// Baseline flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Mean reward per episode.
    Sequence,
    /// Token-weighted mean reward.
    Token,
}

fn check_batch(batch: &[Episode]) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("empty episode batch".into()));
    }
    for (i, e) in batch.iter().enumerate() {
        if e.length == 0 {
            return Err(Error::InvalidInput(format!("episode {i} has length 0")));
        }
        if !e.reward.is_finite() {
            return Err(Error::InvalidInput(format!(
                "episode {i} has non-finite reward {}",
                e.reward
            )));
        }
    }
    Ok(())
}

/// Mean reward over episodes.
pub fn sequence_baseline(batch: &[Episode]) -> Result<f64> {
    check_batch(batch)?;
    Ok(batch.iter().map(|e| e.reward).sum::<f64>() / batch.len() as f64)
}

/// Token-weighted mean reward, `sum(L_i R_i) / sum(L_i)`.
pub fn token_baseline(batch: &[Episode]) -> Result<f64> {
    check_batch(batch)?;
    let weighted: f64 = batch.iter().map(|e| e.length as f64 * e.reward).sum();
    let tokens: f64 = batch.iter().map(|e| e.length as f64).sum();
    Ok(weighted / tokens)
}

/// Advantage options. Standard-deviation normalization is off by default;
/// rewards here are already bounded and rescaling distorts the variance
/// accounting.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AdvantageOptions {
    pub kind: BaselineKind,
    pub normalize_by_std: bool,
}

impl AdvantageOptions {
    pub fn new(kind: BaselineKind) -> Self {
        AdvantageOptions {
            kind,
            normalize_by_std: false,
        }
    }
}

/// Per-episode advantages `R_i - b`. Every token of episode `i` carries
/// this value; it is returned once per episode.
///
/// With `normalize_by_std` the advantages are divided by the population
/// standard deviation of rewards; a zero-variance batch is then an error.
pub fn advantages(batch: &[Episode], opts: AdvantageOptions) -> Result<Vec<f64>> {
    let b = match opts.kind {
        BaselineKind::Sequence => sequence_baseline(batch)?,
        BaselineKind::Token => token_baseline(batch)?,
    };
    let mut adv: Vec<f64> = batch.iter().map(|e| e.reward - b).collect();
    if opts.normalize_by_std {
        let mean = sequence_baseline(batch)?;
        let var = batch
            .iter()
            .map(|e| (e.reward - mean).powi(2))
            .sum::<f64>()
            / batch.len() as f64;
        let std = var.sqrt();
        if std < 1e-12 {
            return Err(Error::InvalidInput(
                "cannot normalize: reward variance is zero".into(),
            ));
        }
        for a in &mut adv {
            *a /= std;
        }
    }
    Ok(adv)
}

/// Both baselines and the token-weighted variance decomposition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineReport {
    /// Episode-mean baseline.
    pub seq_baseline: f64,
    /// Token-weighted baseline.
    pub token_baseline: f64,
    /// `sum L_i (R_i - seq_baseline)^2`.
    pub var_seq: f64,
    /// `sum L_i (R_i - token_baseline)^2`.
    pub var_token: f64,
    /// `total_tokens * (token_baseline - seq_baseline)^2`; the exact
    /// difference between the two variances.
    pub gap: f64,
    pub episodes: usize,
    pub total_tokens: u64,
}

/// Computes the variance decomposition for a batch.
pub fn variance_report(batch: &[Episode]) -> Result<BaselineReport> {
    let b1 = sequence_baseline(batch)?;
    let b2 = token_baseline(batch)?;
    let total_tokens: u64 = batch.iter().map(|e| e.length).sum();
    let weighted_sq = |b: f64| -> f64 {
        batch
            .iter()
            .map(|e| e.length as f64 * (e.reward - b).powi(2))
            .sum()
    };
    Ok(BaselineReport {
        seq_baseline: b1,
        token_baseline: b2,
        var_seq: weighted_sq(b1),
        var_token: weighted_sq(b2),
        gap: total_tokens as f64 * (b2 - b1).powi(2),
        episodes: batch.len(),
        total_tokens,
    })
}

/// Named batches with strong length-reward correlation, the regime where
/// the sequence baseline misprices long episodes.
pub mod stress {
    use super::Episode;

    /// Long episodes fail, short ones succeed: length and reward are
    /// negatively correlated, so the token baseline sits well below the
    /// sequence baseline.
    pub fn long_negative_batch() -> Vec<Episode> {
        vec![
            Episode { length: 900, reward: -1.0 },
            Episode { length: 700, reward: -0.8 },
            Episode { length: 40, reward: 0.9 },
            Episode { length: 30, reward: 1.0 },
            Episode { length: 25, reward: 0.7 },
            Episode { length: 20, reward: 0.8 },
        ]
    }

    /// Long episodes succeed: the mirror image.
    pub fn long_positive_batch() -> Vec<Episode> {
        long_negative_batch()
            .into_iter()
            .map(|e| Episode {
                length: e.length,
                reward: -e.reward,
            })
            .collect()
    }
}
