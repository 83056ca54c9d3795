//! Monte Carlo check that a constant baseline adds no gradient bias.
//!
//! For any policy and any scalar `b` that does not depend on the sampled
//! actions, `E[sum_t grad log pi(a_t | s_t) * b] = 0`. The check estimates
//! that expectation on a short chain of tabular softmax states, where the
//! score function has the closed form
//!
//! ```text
//! d/d theta[s][a'] log pi(a | s) = [a' == a] - pi(a' | s)
//! ```
//!
//! and reports the per-coordinate mean, its standard error, and the worst
//! z-score. An estimator drifting outside a few standard errors flags a
//! bias bug in the surrounding machinery.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use serde::Serialize;

use crate::advantage::Episode;
use crate::error::Error;
use crate::Result;

/// Tabular softmax policy: one logit row per chain state.
#[derive(Debug, Clone)]
pub struct TabularPolicy {
    /// `logits[s][a]`.
    pub logits: Vec<Vec<f64>>,
}

impl TabularPolicy {
    /// Uniform policy (all logits zero).
    pub fn uniform(n_states: usize, n_actions: usize) -> Self {
        TabularPolicy {
            logits: vec![vec![0.0; n_actions]; n_states],
        }
    }

    pub fn n_states(&self) -> usize {
        self.logits.len()
    }

    pub fn n_actions(&self) -> usize {
        self.logits.first().map_or(0, |row| row.len())
    }

    fn validate(&self) -> Result<()> {
        if self.n_states() == 0 || self.n_actions() < 2 {
            return Err(Error::InvalidInput(
                "policy needs >= 1 state and >= 2 actions".into(),
            ));
        }
        for (s, row) in self.logits.iter().enumerate() {
            if row.len() != self.n_actions() {
                return Err(Error::InvalidInput(format!(
                    "state {s} has {} logits, expected {}",
                    row.len(),
                    self.n_actions()
                )));
            }
            if row.iter().any(|l| !l.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "state {s} has a non-finite logit"
                )));
            }
        }
        Ok(())
    }

    /// Softmax action probabilities at state `s`.
    pub fn probs(&self, s: usize) -> Result<Vec<f64>> {
        self.validate()?;
        let row = self
            .logits
            .get(s)
            .ok_or_else(|| Error::InvalidInput(format!("state {s} out of range")))?;
        let m = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = exps.iter().sum();
        Ok(exps.into_iter().map(|e| e / z).collect())
    }
}

/// Result of the unbiasedness estimate over the flattened `(state, action)`
/// coordinate grid.
#[derive(Debug, Clone, Serialize)]
pub struct McCheck {
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
    pub n_trajectories: usize,
    /// Largest `|mean| / std_error` across coordinates.
    pub max_abs_z: f64,
}

impl McCheck {
    /// True when every coordinate mean lies within `z * std_error` of zero.
    pub fn within(&self, z: f64) -> bool {
        self.max_abs_z <= z
    }
}

/// Estimates `E[sum_t grad log pi(a_t|s_t) * baseline]` over
/// `n_trajectories` rollouts of a `horizon`-step chain (state = timestep).
///
/// `horizon` must fit the policy's state count; the policy must be
/// non-degenerate. The estimate's per-coordinate standard errors come from
/// the sample variance, so the caller can apply any z threshold.
pub fn mc_unbiasedness_check<R: Rng>(
    policy: &TabularPolicy,
    horizon: usize,
    baseline: f64,
    n_trajectories: usize,
    rng: &mut R,
) -> Result<McCheck> {
    policy.validate()?;
    if horizon == 0 || horizon > policy.n_states() {
        return Err(Error::InvalidInput(format!(
            "horizon {horizon} not in [1, {}]",
            policy.n_states()
        )));
    }
    if n_trajectories < 2 {
        return Err(Error::InvalidInput("need >= 2 trajectories".into()));
    }
    if !baseline.is_finite() {
        return Err(Error::InvalidInput("baseline must be finite".into()));
    }
    let (ns, na) = (policy.n_states(), policy.n_actions());
    let dim = ns * na;
    let probs: Vec<Vec<f64>> = (0..ns).map(|s| policy.probs(s)).collect::<Result<_>>()?;
    let dists: Vec<WeightedIndex<f64>> = probs
        .iter()
        .map(|p| WeightedIndex::new(p).map_err(|e| Error::InvalidInput(format!("degenerate policy: {e}"))))
        .collect::<Result<_>>()?;

    let mut sum = vec![0.0f64; dim];
    let mut sum_sq = vec![0.0f64; dim];
    let mut g = vec![0.0f64; dim];
    for _ in 0..n_trajectories {
        g.iter_mut().for_each(|x| *x = 0.0);
        for (s, dist) in dists.iter().enumerate().take(horizon) {
            let a = dist.sample(rng);
            for a2 in 0..na {
                let ind = if a2 == a { 1.0 } else { 0.0 };
                g[s * na + a2] += (ind - probs[s][a2]) * baseline;
            }
        }
        for k in 0..dim {
            sum[k] += g[k];
            sum_sq[k] += g[k] * g[k];
        }
    }
    let n = n_trajectories as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std_error: Vec<f64> = sum_sq
        .iter()
        .zip(&mean)
        .map(|(&sq, &m)| (((sq - n * m * m) / (n - 1.0)).max(0.0) / n).sqrt())
        .collect();
    let max_abs_z = mean
        .iter()
        .zip(&std_error)
        .map(|(&m, &se)| {
            if se == 0.0 {
                if m == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            } else {
                (m / se).abs()
            }
        })
        .fold(0.0f64, f64::max);
    Ok(McCheck {
        mean,
        std_error,
        n_trajectories,
        max_abs_z,
    })
}

/// Rolls out episodes from the chain for baseline experiments: length is
/// the horizon, reward is the mean sampled action index in [0, 1].
pub fn trajectory_batch<R: Rng>(
    policy: &TabularPolicy,
    horizon: usize,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Episode>> {
    policy.validate()?;
    if horizon == 0 || horizon > policy.n_states() {
        return Err(Error::InvalidInput(format!(
            "horizon {horizon} not in [1, {}]",
            policy.n_states()
        )));
    }
    let na = policy.n_actions();
    let dists: Vec<WeightedIndex<f64>> = (0..policy.n_states())
        .map(|s| {
            let p = policy.probs(s)?;
            WeightedIndex::new(&p).map_err(|e| Error::InvalidInput(format!("degenerate policy: {e}")))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut total = 0usize;
        for dist in dists.iter().take(horizon) {
            total += dist.sample(rng);
        }
        out.push(Episode {
            length: horizon as u64,
            reward: total as f64 / (horizon * (na - 1)) as f64,
        });
    }
    Ok(out)
}
