//! Desk-scale tooling for plasticity-aware mid-training of language models.
//!
//! The crate packages the pieces needed to plan and sanity-check a
//! continual-pretraining run before committing cluster time:
//!
//! - [`schedule`]: warmup-stable-decay learning-rate schedules and the
//!   plasticity coefficient driven by them.
//! - [`sampling`]: anchor-boosted bucket sampling that couples data mixtures
//!   to the current plasticity, plus fixed curriculum presets.
//! - [`corpus`]: a perplexity-stratified curation pipeline with near-duplicate
//!   removal, heuristic and score gates, bucketing, and mixture composition.
//! - [`advantage`]: sequence- and token-level baselines for policy-gradient
//!   advantages, with a variance decomposition and a Monte Carlo
//!   unbiasedness check.
//! - [`reward`]: staged verifiable rewards (recitation, extraction, multiple
//!   choice, numeric tolerance, rubric judging) built on ROUGE-L.
//! - [`sim`]: a synthetic continual-pretraining simulator with stability
//!   probes for curvature, gradient noise, and one-step update fidelity.
//!
//! Every capability has a runnable example:
//!
//! ```text
//! cargo run --example schedule_curve
//! cargo run --example pas_plan
//! cargo run --example corpus_filter
//! cargo run --example advantage_report
//! cargo run --example reward_scoring
//! cargo run --example forgetting_sim
//! cargo run --example stability_probes
//! ```
//!
//! The same operations are reachable through the `midtrain` binary for
//! scripted use; see the repository README for the subcommand reference.
//!
//! All randomness flows from a single 64-bit seed through the stream-split
//! scheme in [`rng`], so any plan, filter run, or simulation is reproducible
//! byte for byte.

pub mod advantage;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod io;
pub mod reward;
pub mod rng;
pub mod sampling;
pub mod schedule;
pub mod sim;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
