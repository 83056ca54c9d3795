//! Rubric scoring through a pluggable judge.
//!
//! A judge maps (document, criterion) to a score in [0, 1]. Two
//! implementations ship: a deterministic keyword-presence judge used in
//! tests and offline runs, and a subprocess bridge speaking
//! newline-delimited JSON for hooking up external scorers.
//!
//! Subprocess protocol, one call per invocation: the judge command is
//! spawned, a single request line
//! `{"document": "...", "criterion": "..."}` is written to its stdin,
//! stdin is closed, and the first line of stdout must be
//! `{"score": <float in [0,1]>}`. A non-zero exit, malformed output, or an
//! out-of-range score is a judge error, which callers must not conflate
//! with a zero score.

use std::io::Write;
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::reward::{RewardDetail, RewardOutcome};
use crate::Result;

/// One rubric criterion. `keywords` drive the built-in keyword judge;
/// external judges receive only the name.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    #[serde(default)]
    pub keywords: Vec<String>,
}

/// Scores a document against a single criterion.
pub trait Judge {
    fn score(&self, document: &str, criterion: &Criterion) -> Result<f64>;

    /// Whether `score` may be called from multiple threads at once.
    /// Harnesses must serialize calls when this is false.
    fn concurrent_safe(&self) -> bool {
        false
    }
}

/// Deterministic mock judge: a criterion scores 1 when every one of its
/// keywords occurs in the document, else 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct KeywordJudge;

impl Judge for KeywordJudge {
    fn score(&self, document: &str, criterion: &Criterion) -> Result<f64> {
        let hit = criterion.keywords.iter().all(|k| document.contains(k));
        Ok(if hit { 1.0 } else { 0.0 })
    }

    fn concurrent_safe(&self) -> bool {
        true
    }
}

#[derive(Serialize)]
struct JudgeRequest<'a> {
    document: &'a str,
    criterion: &'a str,
}

#[derive(Deserialize)]
struct JudgeResponse {
    score: f64,
}

/// Bridges to an external judge process.
#[derive(Debug, Clone)]
pub struct SubprocessJudge {
    /// Program and arguments, e.g. `["python3", "judge.py"]`.
    pub command: Vec<String>,
}

impl SubprocessJudge {
    pub fn new(command: Vec<String>) -> Result<Self> {
        if command.is_empty() {
            return Err(Error::config("judge.command", "must name a program"));
        }
        Ok(SubprocessJudge { command })
    }
}

impl Judge for SubprocessJudge {
    fn score(&self, document: &str, criterion: &Criterion) -> Result<f64> {
        let request = serde_json::to_string(&JudgeRequest {
            document,
            criterion: &criterion.name,
        })
        .map_err(|e| Error::Judge(format!("encode request: {e}")))?;

        let mut child = Command::new(&self.command[0])
            .args(&self.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| Error::Judge(format!("spawn {}: {e}", self.command[0])))?;
        {
            let stdin = child.stdin.as_mut().expect("piped stdin");
            stdin
                .write_all(request.as_bytes())
                .and_then(|_| stdin.write_all(b"\n"))
                .map_err(|e| Error::Judge(format!("write request: {e}")))?;
        }
        let output = child
            .wait_with_output()
            .map_err(|e| Error::Judge(format!("wait: {e}")))?;
        if !output.status.success() {
            return Err(Error::Judge(format!(
                "{} exited with {}",
                self.command[0], output.status
            )));
        }
        let stdout = String::from_utf8_lossy(&output.stdout);
        let line = stdout
            .lines()
            .next()
            .ok_or_else(|| Error::Judge("empty response".into()))?;
        let resp: JudgeResponse = serde_json::from_str(line)
            .map_err(|e| Error::Judge(format!("bad response {line:?}: {e}")))?;
        if !(resp.score.is_finite() && (0.0..=1.0).contains(&resp.score)) {
            return Err(Error::Judge(format!("score {} out of [0, 1]", resp.score)));
        }
        Ok(resp.score)
    }
}

/// Mean judge score over the rubric's criteria.
///
/// The rubric must be non-empty. A judge failure aborts scoring; it never
/// silently contributes zero. Per-criterion scores outside [0, 1] are
/// rejected even from in-process judges.
pub fn rubric_score(
    document: &str,
    rubric: &[Criterion],
    judge: &dyn Judge,
) -> Result<RewardOutcome> {
    if rubric.is_empty() {
        return Err(Error::InvalidInput("rubric has no criteria".into()));
    }
    let mut per_criterion = Vec::with_capacity(rubric.len());
    let mut total = 0.0;
    for criterion in rubric {
        let s = judge.score(document, criterion)?;
        if !(s.is_finite() && (0.0..=1.0).contains(&s)) {
            return Err(Error::Judge(format!(
                "criterion {:?} scored {s}, outside [0, 1]",
                criterion.name
            )));
        }
        total += s;
        per_criterion.push((criterion.name.clone(), s));
    }
    Ok(RewardOutcome {
        value: total / rubric.len() as f64,
        detail: RewardDetail::Rubric { per_criterion },
    })
}
