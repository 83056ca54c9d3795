//! Corpus cleaning pipeline: near-duplicate removal, rule and score gates,
//! difficulty bucketing, and mixture manifests.
//!
//! Every stage is a pure function from a record list to a smaller record
//! list plus a [`FilterStage`] accounting row. Stages chain in any order;
//! [`FilterReport`] checks that counts compose (each stage's input equals
//! the previous stage's survivors and survivors = input - removed).

pub mod dedup;
pub mod filters;
pub mod manifest;
pub mod record;

pub use dedup::{dedup_minhash, DedupConfig};
pub use filters::{heuristic_filter, ppl_filter, strip_html, threshold_gate, ScoreField};
pub use manifest::{bucketize, mixture_compose, BucketManifest, CompositeManifest, DomainManifest};
pub use record::{CorpusRecord, JudgeScores, Source};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Accounting row for one filter stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStage {
    pub stage: String,
    pub input: usize,
    pub removed: usize,
    pub survivors: usize,
}

impl FilterStage {
    /// Builds a row from observed input and survivor counts.
    pub fn new(stage: impl Into<String>, input: usize, survivors: usize) -> Self {
        assert!(survivors <= input, "stage cannot invent records");
        FilterStage {
            stage: stage.into(),
            input,
            removed: input - survivors,
            survivors,
        }
    }
}

/// Ordered stage rows for one pipeline run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub stages: Vec<FilterStage>,
}

impl FilterReport {
    pub fn new() -> Self {
        FilterReport::default()
    }

    /// Appends a stage row, enforcing count composition with the previous
    /// stage.
    pub fn push(&mut self, stage: FilterStage) -> Result<()> {
        if stage.survivors + stage.removed != stage.input {
            return Err(Error::InvalidInput(format!(
                "stage {}: survivors {} + removed {} != input {}",
                stage.stage, stage.survivors, stage.removed, stage.input
            )));
        }
        if let Some(prev) = self.stages.last() {
            if stage.input != prev.survivors {
                return Err(Error::InvalidInput(format!(
                    "stage {} consumed {} records but stage {} produced {}",
                    stage.stage, stage.input, prev.stage, prev.survivors
                )));
            }
        }
        self.stages.push(stage);
        Ok(())
    }

    /// Survivor count after the last stage, if any stage ran.
    pub fn final_survivors(&self) -> Option<usize> {
        self.stages.last().map(|s| s.survivors)
    }
}
