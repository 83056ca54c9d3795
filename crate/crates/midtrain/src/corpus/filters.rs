//! Rule-based and score-based record gates.
//!
//! `heuristic_filter` rewrites text (markup removal) before judging it, so
//! its length gate sees what a model would see. The perplexity filter and
//! the score gates never modify records. All three return the survivor
//! list plus an accounting row; applying the same gate to its own output
//! removes nothing.

use std::sync::OnceLock;

use regex::Regex;

use crate::corpus::record::CorpusRecord;
use crate::corpus::FilterStage;
use crate::error::Error;
use crate::Result;

fn tag_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"<[^<>]*>").expect("static pattern"))
}

/// Removes HTML/XML-style tags, iterating until no tag remains so that
/// nested fragments like `<<b>tag>` cannot leave a tag behind.
pub fn strip_html(text: &str) -> String {
    let mut cur = text.to_string();
    loop {
        let next = tag_pattern().replace_all(&cur, "").into_owned();
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// Han ideographs plus kana and hangul; everything `is_alphabetic` outside
/// these ranges counts as a foreign letter.
fn is_cjk(c: char) -> bool {
    matches!(u32::from(c),
        0x3400..=0x4DBF      // CJK extension A
        | 0x4E00..=0x9FFF    // CJK unified ideographs
        | 0xF900..=0xFAFF    // CJK compatibility ideographs
        | 0x20000..=0x2A6DF  // CJK extension B
        | 0x3040..=0x30FF    // hiragana and katakana
        | 0xAC00..=0xD7AF    // hangul syllables
    )
}

/// Fraction of alphabetic characters that are not CJK; 0 for letterless
/// text.
pub fn foreign_letter_ratio(text: &str) -> f64 {
    let mut letters = 0usize;
    let mut foreign = 0usize;
    for c in text.chars() {
        if c.is_alphabetic() {
            letters += 1;
            if !is_cjk(c) {
                foreign += 1;
            }
        }
    }
    if letters == 0 {
        0.0
    } else {
        foreign as f64 / letters as f64
    }
}

/// Strips markup, then drops records that are too short after stripping;
/// synthetic records additionally fail when their foreign-letter ratio
/// exceeds `max_foreign_ratio`.
pub fn heuristic_filter(
    records: Vec<CorpusRecord>,
    min_length: usize,
    max_foreign_ratio: f64,
) -> Result<(Vec<CorpusRecord>, FilterStage)> {
    if !(0.0..=1.0).contains(&max_foreign_ratio) {
        return Err(Error::config("max_foreign_ratio", "must lie in [0, 1]"));
    }
    let input = records.len();
    let mut survivors = Vec::with_capacity(input);
    for mut r in records {
        let clean = strip_html(&r.text);
        if clean != r.text {
            r.set_text(clean);
        }
        if r.char_length < min_length {
            continue;
        }
        if r.source.is_synthetic() && foreign_letter_ratio(&r.text) > max_foreign_ratio {
            continue;
        }
        survivors.push(r);
    }
    let stage = FilterStage::new("heuristic", input, survivors.len());
    Ok((survivors, stage))
}

/// Drops records whose perplexity is strictly above `max_ppl`. Every
/// record must carry a perplexity; otherwise the batch is rejected with
/// the offending ids.
pub fn ppl_filter(
    records: Vec<CorpusRecord>,
    max_ppl: f64,
) -> Result<(Vec<CorpusRecord>, FilterStage)> {
    if !(max_ppl.is_finite() && max_ppl > 0.0) {
        return Err(Error::config("max_ppl", "must be finite and > 0"));
    }
    require_field(&records, "ppl", |r| r.ppl.is_some())?;
    let input = records.len();
    let survivors: Vec<CorpusRecord> = records
        .into_iter()
        .filter(|r| r.ppl.expect("checked above") <= max_ppl)
        .collect();
    let stage = FilterStage::new("ppl", input, survivors.len());
    Ok((survivors, stage))
}

/// Which score a threshold gate reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreField {
    /// The scalar `quality_score`.
    Quality,
    /// All six judge scores; a record survives only if every one clears
    /// the minimum.
    Judge,
}

/// Keeps records whose selected score(s) are all >= `min_value`.
pub fn threshold_gate(
    records: Vec<CorpusRecord>,
    field: ScoreField,
    min_value: f64,
) -> Result<(Vec<CorpusRecord>, FilterStage)> {
    if !min_value.is_finite() {
        return Err(Error::config("min_value", "must be finite"));
    }
    let (name, missing): (&str, fn(&CorpusRecord) -> bool) = match field {
        ScoreField::Quality => ("quality_score", |r| r.quality_score.is_some()),
        ScoreField::Judge => ("judge_scores", |r| r.judge_scores.is_some()),
    };
    require_field(&records, name, missing)?;
    let input = records.len();
    let survivors: Vec<CorpusRecord> = records
        .into_iter()
        .filter(|r| match field {
            ScoreField::Quality => r.quality_score.expect("checked above") >= min_value,
            ScoreField::Judge => r
                .judge_scores
                .as_ref()
                .expect("checked above")
                .all()
                .iter()
                .all(|&s| f64::from(s) >= min_value),
        })
        .collect();
    let stage = FilterStage::new(
        match field {
            ScoreField::Quality => "quality_gate",
            ScoreField::Judge => "judge_gate",
        },
        input,
        survivors.len(),
    );
    Ok((survivors, stage))
}

fn require_field(
    records: &[CorpusRecord],
    field: &'static str,
    present: impl Fn(&CorpusRecord) -> bool,
) -> Result<()> {
    let missing: Vec<&str> = records
        .iter()
        .filter(|r| !present(r))
        .map(|r| r.id.as_str())
        .collect();
    if missing.is_empty() {
        return Ok(());
    }
    Err(Error::MissingField {
        field,
        count: missing.len(),
        sample: missing.iter().take(5).map(|s| s.to_string()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::record::{JudgeScores, Source};

    fn rec(id: &str, text: &str, source: Source) -> CorpusRecord {
        CorpusRecord::new(id, text, source)
    }

    fn with_ppl(id: &str, ppl: f64) -> CorpusRecord {
        let mut r = rec(id, "身", Source::Legal);
        r.ppl = Some(ppl);
        r
    }

    fn judged(id: &str, scores: [u8; 6]) -> CorpusRecord {
        let mut r = rec(id, "身", Source::SyntheticReasoning);
        r.judge_scores = Some(JudgeScores {
            reasoning_quality: scores[0],
            reasoning_consistency: scores[1],
            answer_reasoning_consistency: scores[2],
            conciseness: scores[3],
            linguistic: scores[4],
            overall: scores[5],
        });
        r
    }

    #[test]
    fn strip_html_reaches_a_fixpoint() {
        assert_eq!(strip_html("a<b>c</b>d"), "acd");
        assert_eq!(strip_html("<<b>tag>"), "");
        assert_eq!(strip_html("plain"), "plain");
        let once = strip_html("x<<i>y>z");
        assert_eq!(strip_html(&once), once);
    }

    #[test]
    fn length_gate_measures_text_after_stripping() {
        let long_clean = "法".repeat(500);
        let boundary = "条".repeat(199);
        let tagged: String = "款".repeat(150)
            + &(0..20).map(|_| "<div class=\"xx\">").collect::<String>();
        let records = vec![
            rec("keep", &long_clean, Source::General),
            rec("short", &boundary, Source::General),
            rec("markup", &tagged, Source::General),
        ];
        let (survivors, stage) = heuristic_filter(records, 200, 0.3).unwrap();
        assert_eq!(stage.input, 3);
        assert_eq!(stage.removed, 2);
        assert_eq!(survivors[0].id, "keep");
        assert_eq!(survivors[0].char_length, 500);
    }

    #[test]
    fn exactly_min_length_survives() {
        let records = vec![rec("edge", &"例".repeat(200), Source::General)];
        let (survivors, _) = heuristic_filter(records, 200, 0.3).unwrap();
        assert_eq!(survivors.len(), 1);
    }

    #[test]
    fn foreign_ratio_gate_hits_only_synthetic_sources() {
        // 40 latin letters vs 60 han: ratio 0.4.
        let mixed = format!("{}{}", "w".repeat(40), "文".repeat(60));
        let records = vec![
            rec("syn", &mixed.repeat(4), Source::SyntheticReasoning),
            rec("gen", &mixed.repeat(4), Source::General),
        ];
        let (survivors, stage) = heuristic_filter(records, 100, 0.3).unwrap();
        assert_eq!(stage.removed, 1);
        assert_eq!(survivors[0].id, "gen");
    }

    #[test]
    fn foreign_ratio_counts_letters_only() {
        // Digits and punctuation are not letters; 3 latin among 7 han.
        let text = format!("12345,.!{}{}", "x".repeat(3), "律".repeat(7));
        assert!((foreign_letter_ratio(&text) - 0.3).abs() < 1e-12);
        assert_eq!(foreign_letter_ratio("123 ,,, 456"), 0.0);
    }

    #[test]
    fn kana_and_hangul_count_as_cjk() {
        assert_eq!(foreign_letter_ratio("かなカナ한글漢字"), 0.0);
    }

    #[test]
    fn ppl_filter_keeps_boundary_and_drops_above() {
        let records = vec![
            with_ppl("p-5", 5.0),
            with_ppl("p-29", 29.0),
            with_ppl("p-30", 30.0),
            with_ppl("p-31", 31.0),
            with_ppl("p-100", 100.0),
        ];
        let (survivors, stage) = ppl_filter(records, 30.0).unwrap();
        let ids: Vec<&str> = survivors.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["p-5", "p-29", "p-30"]);
        assert_eq!(stage.removed, 2);
    }

    #[test]
    fn ppl_filter_rejects_missing_scores_with_ids() {
        let records = vec![with_ppl("ok", 5.0), rec("gap-1", "身", Source::Legal)];
        let err = ppl_filter(records, 30.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("ppl"), "{msg}");
        assert!(msg.contains("gap-1"), "{msg}");
    }

    #[test]
    fn quality_gate_is_inclusive_at_the_minimum() {
        let mk = |id: &str, q: f64| {
            let mut r = rec(id, "身", Source::Legal);
            r.quality_score = Some(q);
            r
        };
        let records = vec![mk("lo", 2.9), mk("edge", 3.0), mk("hi", 4.5)];
        let (survivors, stage) = threshold_gate(records, ScoreField::Quality, 3.0).unwrap();
        let ids: Vec<&str> = survivors.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["edge", "hi"]);
        assert_eq!(stage.stage, "quality_gate");
    }

    #[test]
    fn judge_gate_requires_every_score_to_clear() {
        let records = vec![
            judged("all7", [7, 7, 7, 7, 7, 7]),
            judged("one6", [9, 9, 9, 6, 9, 9]),
        ];
        let (survivors, _) = threshold_gate(records, ScoreField::Judge, 7.0).unwrap();
        assert_eq!(survivors.len(), 1);
        assert_eq!(survivors[0].id, "all7");
    }

    #[test]
    fn gates_error_on_missing_scores() {
        let records = vec![rec("bare", "身", Source::Legal)];
        assert!(threshold_gate(records.clone(), ScoreField::Quality, 3.0).is_err());
        assert!(threshold_gate(records, ScoreField::Judge, 7.0).is_err());
    }

    #[test]
    fn heuristic_filter_is_idempotent() {
        let mut records = vec![
            rec("a", &format!("x<<i>y>{}", "文".repeat(300)), Source::General),
            rec("b", &"法律条文".repeat(80), Source::SyntheticRephrase),
            rec("c", &"briefly latin".repeat(40), Source::SyntheticReasoning),
        ];
        records[0].ppl = Some(3.0);
        let (once, _) = heuristic_filter(records, 200, 0.3).unwrap();
        let (twice, stage) = heuristic_filter(once.clone(), 200, 0.3).unwrap();
        assert_eq!(stage.removed, 0);
        assert_eq!(once, twice);
    }
}
