//! Corpus record schema.
//!
//! Records travel as JSONL, one object per line. `char_length` is derived
//! from `text` on construction and on deserialization; a stale value in an
//! input file is recomputed rather than trusted. Perplexity and the two
//! quality scores are attached by upstream scorers and are optional until
//! the stage that needs them.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Where a record came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    General,
    Legal,
    SyntheticReasoning,
    SyntheticRephrase,
}

impl Source {
    /// Synthetic records face the stricter mixed-language gate.
    pub fn is_synthetic(self) -> bool {
        matches!(self, Source::SyntheticReasoning | Source::SyntheticRephrase)
    }
}

/// Six 1-10 integer ratings from the reasoning judge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JudgeScores {
    pub reasoning_quality: u8,
    pub reasoning_consistency: u8,
    pub answer_reasoning_consistency: u8,
    pub conciseness: u8,
    pub linguistic: u8,
    pub overall: u8,
}

impl JudgeScores {
    pub fn all(&self) -> [u8; 6] {
        [
            self.reasoning_quality,
            self.reasoning_consistency,
            self.answer_reasoning_consistency,
            self.conciseness,
            self.linguistic,
            self.overall,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if self.all().iter().any(|s| !(1..=10).contains(s)) {
            return Err(Error::InvalidInput(format!(
                "judge scores must lie in [1, 10]: {self:?}"
            )));
        }
        Ok(())
    }
}

/// One text sample with provenance and optional scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "RecordWire")]
pub struct CorpusRecord {
    pub id: String,
    pub text: String,
    pub source: Source,
    /// Count of unicode scalar values in `text`. Derived; kept in sync by
    /// the constructor, deserialization, and text rewrites.
    pub char_length: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ppl: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quality_score: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub judge_scores: Option<JudgeScores>,
}

/// Wire shape: accepts records without `char_length` and recomputes it
/// either way.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordWire {
    id: String,
    text: String,
    source: Source,
    #[serde(default)]
    #[allow(dead_code)]
    char_length: Option<usize>,
    #[serde(default)]
    ppl: Option<f64>,
    #[serde(default)]
    quality_score: Option<f64>,
    #[serde(default)]
    judge_scores: Option<JudgeScores>,
}

impl From<RecordWire> for CorpusRecord {
    fn from(w: RecordWire) -> Self {
        let mut rec = CorpusRecord::new(w.id, w.text, w.source);
        rec.ppl = w.ppl;
        rec.quality_score = w.quality_score;
        rec.judge_scores = w.judge_scores;
        rec
    }
}

impl CorpusRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>, source: Source) -> Self {
        let text = text.into();
        let char_length = text.chars().count();
        CorpusRecord {
            id: id.into(),
            text,
            source,
            char_length,
            ppl: None,
            quality_score: None,
            judge_scores: None,
        }
    }

    /// Replaces the text and keeps `char_length` consistent.
    pub fn set_text(&mut self, text: String) {
        self.char_length = text.chars().count();
        self.text = text;
    }

    /// Checks the optional-field invariants.
    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(Error::InvalidInput("record with empty id".into()));
        }
        if let Some(p) = self.ppl {
            if !(p.is_finite() && p > 0.0) {
                return Err(Error::InvalidInput(format!(
                    "record {}: ppl must be finite and > 0, got {p}",
                    self.id
                )));
            }
        }
        if let Some(q) = self.quality_score {
            if !(q.is_finite() && (0.0..=5.0).contains(&q)) {
                return Err(Error::InvalidInput(format!(
                    "record {}: quality_score must lie in [0, 5], got {q}",
                    self.id
                )));
            }
        }
        if let Some(j) = &self.judge_scores {
            j.validate()
                .map_err(|e| Error::InvalidInput(format!("record {}: {e}", self.id)))?;
        }
        Ok(())
    }
}
