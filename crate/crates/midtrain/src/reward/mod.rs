//! Verifiable rewards for staged post-training curricula.
//!
//! Five stages, ordered by output budget: recitation of statutes from
//! memory, extraction of applicable statutes, multiple-choice case
//! analysis, numeric judgment within a tolerance band, and long-form
//! document drafting scored by a rubric judge. Each reward returns a value
//! in [0, 1] plus a typed detail record explaining how the value arose.

mod judge;
mod rouge;

pub use judge::{rubric_score, Criterion, Judge, KeywordJudge, SubprocessJudge};
pub use rouge::{lcs_len, rouge_l, rouge_l_units, CharUnits, UnitTokenizer, WhitespaceUnits};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Curriculum stage. Output budgets double per stage from 1k to 32k units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Memorization,
    Application,
    CaseAnalysis,
    Judgment,
    Document,
}

impl Stage {
    /// Output cap in tokenizer units for this stage.
    pub fn max_output_units(self) -> usize {
        match self {
            Stage::Memorization => 1_024,
            Stage::Application => 4_096,
            Stage::CaseAnalysis => 8_192,
            Stage::Judgment => 16_384,
            Stage::Document => 32_768,
        }
    }

    pub const ALL: [Stage; 5] = [
        Stage::Memorization,
        Stage::Application,
        Stage::CaseAnalysis,
        Stage::Judgment,
        Stage::Document,
    ];
}

/// A stage together with its output cap. The cap is always the stage's
/// canonical one; the constructor is the only way to build a spec.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RewardStageSpec {
    pub stage: Stage,
    pub max_output_units: usize,
}

impl RewardStageSpec {
    pub fn new(stage: Stage) -> Self {
        RewardStageSpec {
            stage,
            max_output_units: stage.max_output_units(),
        }
    }
}

/// A scored reward: the scalar plus how it was computed.
#[derive(Debug, Clone, Serialize)]
pub struct RewardOutcome {
    pub value: f64,
    pub detail: RewardDetail,
}

/// Per-reward diagnostic payload.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardDetail {
    Memorization {
        truncated: bool,
        scored_units: usize,
        lcs: usize,
    },
    Match {
        precision: f64,
        recall: f64,
        /// (prediction index, gold index, score) per matched pair.
        pairs: Vec<(usize, usize, f64)>,
    },
    Mcq {
        parsed: Option<char>,
    },
    Tolerance {
        abs_error: f64,
        bound: f64,
    },
    Rubric {
        per_criterion: Vec<(String, f64)>,
    },
}

/// Recitation reward: the prediction is truncated to the memorization
/// stage's unit cap, then scored with ROUGE-L against the reference.
/// Overlong recitations cannot pad their way to a high score.
pub fn memorization_reward(
    prediction: &str,
    reference: &str,
    tok: &dyn UnitTokenizer,
) -> Result<RewardOutcome> {
    let cap = Stage::Memorization.max_output_units();
    let pred_units = tok.units(prediction);
    let ref_units = tok.units(reference);
    let truncated = pred_units.len() > cap;
    let scored = if truncated {
        &pred_units[..cap]
    } else {
        &pred_units[..]
    };
    let (f, lcs) = rouge_l_units(scored, &ref_units)?;
    Ok(RewardOutcome {
        value: f,
        detail: RewardDetail::Memorization {
            truncated,
            scored_units: scored.len(),
            lcs,
        },
    })
}

/// Extraction reward: F1 over a one-to-one matching between predicted and
/// gold statutes.
///
/// Candidate pairs are those with ROUGE-L strictly above `match_threshold`
/// (default 0.5). Pairs are taken greedily by descending score (ties break
/// on lower prediction index, then lower gold index), each prediction and
/// each gold matching at most once. Empty predictions score 0 with zero
/// recall; an empty gold set is an error.
pub fn statute_f1(
    predictions: &[String],
    golds: &[String],
    tok: &dyn UnitTokenizer,
    match_threshold: f64,
) -> Result<RewardOutcome> {
    if golds.is_empty() {
        return Err(Error::InvalidInput("statute_f1: empty gold set".into()));
    }
    if !(match_threshold.is_finite() && (0.0..1.0).contains(&match_threshold)) {
        return Err(Error::config(
            "reward.match_threshold",
            "must lie in [0, 1)",
        ));
    }
    let gold_units: Vec<Vec<&str>> = golds.iter().map(|g| tok.units(g)).collect();
    for (j, g) in gold_units.iter().enumerate() {
        if g.is_empty() {
            return Err(Error::InvalidInput(format!(
                "statute_f1: gold {j} has no units"
            )));
        }
    }
    let mut candidates: Vec<(usize, usize, f64)> = Vec::new();
    for (i, p) in predictions.iter().enumerate() {
        let p_units = tok.units(p);
        for (j, g_units) in gold_units.iter().enumerate() {
            let (f, _) = rouge_l_units(&p_units, g_units)?;
            if f > match_threshold {
                candidates.push((i, j, f));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.2.partial_cmp(&a.2)
            .expect("scores are finite")
            .then(a.0.cmp(&b.0))
            .then(a.1.cmp(&b.1))
    });
    let mut pred_used = vec![false; predictions.len()];
    let mut gold_used = vec![false; golds.len()];
    let mut pairs = Vec::new();
    for (i, j, f) in candidates {
        if !pred_used[i] && !gold_used[j] {
            pred_used[i] = true;
            gold_used[j] = true;
            pairs.push((i, j, f));
        }
    }
    let matched = pairs.len() as f64;
    let precision = if predictions.is_empty() {
        0.0
    } else {
        matched / predictions.len() as f64
    };
    let recall = matched / golds.len() as f64;
    let value = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(RewardOutcome {
        value,
        detail: RewardDetail::Match {
            precision,
            recall,
            pairs,
        },
    })
}

/// Multiple-choice reward: 1 when the response's chosen option equals the
/// gold option, else 0.
///
/// The chosen option is the last standalone option token in the response:
/// an uppercase label in `A..` (covering `option_count` options) whose
/// neighbors are not alphanumeric, so `(K)`, `K.`, and a bare `K` parse
/// while the `K` in `BANK` does not. An unparseable response scores 0 and
/// is flagged in the detail, not an error.
pub fn mcq_accuracy(response: &str, gold_option: char, option_count: usize) -> Result<RewardOutcome> {
    if !(2..=26).contains(&option_count) {
        return Err(Error::config("reward.option_count", "must lie in [2, 26]"));
    }
    let last_label = (b'A' + option_count as u8 - 1) as char;
    if !('A'..=last_label).contains(&gold_option) {
        return Err(Error::config(
            "reward.gold_option",
            format!("{gold_option:?} not in A..{last_label}"),
        ));
    }
    let chars: Vec<char> = response.chars().collect();
    let mut parsed = None;
    for (k, &c) in chars.iter().enumerate() {
        if !('A'..=last_label).contains(&c) {
            continue;
        }
        let prev_ok = k == 0 || !chars[k - 1].is_alphanumeric();
        let next_ok = k + 1 == chars.len() || !chars[k + 1].is_alphanumeric();
        if prev_ok && next_ok {
            parsed = Some(c);
        }
    }
    let value = if parsed == Some(gold_option) { 1.0 } else { 0.0 };
    Ok(RewardOutcome {
        value,
        detail: RewardDetail::Mcq { parsed },
    })
}

/// Numeric judgment reward: 1 when the prediction falls within
/// `tolerance * |gold|` of the gold value, inclusive. A gold of exactly
/// zero admits only an exactly-zero prediction.
pub fn tolerance_reward(predicted: f64, gold: f64, tolerance: f64) -> Result<RewardOutcome> {
    if !predicted.is_finite() || !gold.is_finite() {
        return Err(Error::InvalidInput(
            "tolerance_reward: values must be finite".into(),
        ));
    }
    if !(tolerance.is_finite() && tolerance >= 0.0) {
        return Err(Error::config("reward.tolerance", "must be finite and >= 0"));
    }
    let abs_error = (predicted - gold).abs();
    let bound = tolerance * gold.abs();
    let hit = if gold == 0.0 {
        predicted == 0.0
    } else {
        abs_error <= bound
    };
    Ok(RewardOutcome {
        value: if hit { 1.0 } else { 0.0 },
        detail: RewardDetail::Tolerance { abs_error, bound },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn stage_caps_double_from_1k() {
        let caps: Vec<usize> = Stage::ALL.iter().map(|s| s.max_output_units()).collect();
        assert_eq!(caps, vec![1_024, 4_096, 8_192, 16_384, 32_768]);
        for s in Stage::ALL {
            assert_eq!(RewardStageSpec::new(s).max_output_units, s.max_output_units());
        }
    }

    #[test]
    fn perfect_recitation_scores_one() {
        let statute = "第三十条 当事人应当遵循公平原则确定各方的权利和义务";
        let out = memorization_reward(statute, statute, &CharUnits).unwrap();
        assert_eq!(out.value, 1.0);
        match out.detail {
            RewardDetail::Memorization { truncated, .. } => assert!(!truncated),
            other => panic!("unexpected detail {other:?}"),
        }
    }

    #[test]
    fn overlong_recitation_is_truncated_before_scoring() {
        let reference: String = "甲".repeat(600) + &"乙".repeat(600);
        let elaboration: String = "丙".repeat(2_000);
        let prediction = reference.clone() + &elaboration;
        let out = memorization_reward(&prediction, &reference, &CharUnits).unwrap();
        let (truncated, scored_units) = match out.detail {
            RewardDetail::Memorization {
                truncated,
                scored_units,
                ..
            } => (truncated, scored_units),
            other => panic!("unexpected detail {other:?}"),
        };
        assert!(truncated);
        assert_eq!(scored_units, 1_024);
        // The scored prefix covers 1024 of 1200 reference units.
        let p = 1_024.0 / 1_024.0;
        let r = 1_024.0 / 1_200.0;
        let expect = 2.0 * p * r / (p + r);
        assert!((out.value - expect).abs() < 1e-12);
        assert!(out.value < 1.0);
    }

    #[test]
    fn truncation_cannot_be_outpadded() {
        // Same correct prefix, ever longer junk tails: score must not grow
        // once the cap is passed.
        let reference = "a".repeat(200);
        let base = memorization_reward(&reference, &reference, &CharUnits)
            .unwrap()
            .value;
        let padded = memorization_reward(
            &(reference.clone() + &"z".repeat(5_000)),
            &reference,
            &CharUnits,
        )
        .unwrap()
        .value;
        let more_padded = memorization_reward(
            &(reference.clone() + &"z".repeat(50_000)),
            &reference,
            &CharUnits,
        )
        .unwrap()
        .value;
        assert_eq!(base, 1.0);
        assert!(padded < 1.0);
        assert_eq!(padded, more_padded);
    }

    fn s(x: &str) -> String {
        x.to_string()
    }

    #[test]
    fn one_correct_one_spurious_prediction() {
        let golds = vec![s("民法典第五百条")];
        let preds = vec![s("民法典第五百条"), s("完全无关的条文引用")];
        let out = statute_f1(&preds, &golds, &CharUnits, 0.5).unwrap();
        match out.detail {
            RewardDetail::Match {
                precision, recall, ..
            } => {
                assert!((precision - 0.5).abs() < 1e-12);
                assert_eq!(recall, 1.0);
            }
            other => panic!("unexpected detail {other:?}"),
        }
        assert!((out.value - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_golds_halve_recall() {
        let golds: Vec<String> = vec![s("合同法第十二条"), s("刑法第二百条")];
        let doubled: Vec<String> = golds.iter().chain(golds.iter()).cloned().collect();
        let out = statute_f1(&golds, &doubled, &CharUnits, 0.5).unwrap();
        match out.detail {
            RewardDetail::Match {
                precision, recall, ..
            } => {
                assert_eq!(precision, 1.0);
                assert_eq!(recall, 0.5);
            }
            other => panic!("unexpected detail {other:?}"),
        }
    }

    #[test]
    fn empty_predictions_score_zero_not_error() {
        let out = statute_f1(&[], &[s("条文")], &CharUnits, 0.5).unwrap();
        assert_eq!(out.value, 0.0);
        match out.detail {
            RewardDetail::Match {
                precision, recall, ..
            } => {
                assert_eq!(precision, 0.0);
                assert_eq!(recall, 0.0);
            }
            other => panic!("unexpected detail {other:?}"),
        }
    }

    #[test]
    fn empty_gold_set_errors() {
        assert!(statute_f1(&[s("x")], &[], &CharUnits, 0.5).is_err());
    }

    #[test]
    fn threshold_is_strict() {
        // Prediction at exactly the threshold score must not match.
        // rouge("ab", "ab") = 1.0; rouge("ab", "ax") = 0.5 exactly.
        let out = statute_f1(&[s("ab")], &[s("ax")], &CharUnits, 0.5).unwrap();
        assert_eq!(out.value, 0.0);
        let out = statute_f1(&[s("ab")], &[s("ab")], &CharUnits, 0.5).unwrap();
        assert_eq!(out.value, 1.0);
    }

    #[test]
    fn matching_is_one_to_one() {
        // One prediction resembling both golds may claim only one.
        let golds = vec![s("第十二条甲"), s("第十二条乙")];
        let preds = vec![s("第十二条甲")];
        let out = statute_f1(&preds, &golds, &CharUnits, 0.5).unwrap();
        match out.detail {
            RewardDetail::Match { pairs, recall, .. } => {
                assert_eq!(pairs.len(), 1);
                assert_eq!(pairs[0], (0, 0, 1.0));
                assert_eq!(recall, 0.5);
            }
            other => panic!("unexpected detail {other:?}"),
        }
    }

    #[test]
    fn mcq_takes_the_last_standalone_option() {
        let r = "Options (A) through (P). First I considered (B), but the answer is (K).";
        let out = mcq_accuracy(r, 'K', 16).unwrap();
        assert_eq!(out.value, 1.0);
        let out = mcq_accuracy(r, 'B', 16).unwrap();
        assert_eq!(out.value, 0.0);
        match out.detail {
            RewardDetail::Mcq { parsed } => assert_eq!(parsed, Some('K')),
            other => panic!("unexpected detail {other:?}"),
        }
    }

    #[test]
    fn mcq_ignores_letters_inside_words() {
        let out = mcq_accuracy("the BANK case settles it: C", 'C', 16).unwrap();
        assert_eq!(out.value, 1.0);
        let out = mcq_accuracy("the BANK case settles it", 'K', 16).unwrap();
        match out.detail {
            RewardDetail::Mcq { parsed } => assert_eq!(parsed, None),
            other => panic!("unexpected detail {other:?}"),
        }
        assert_eq!(out.value, 0.0);
    }

    #[test]
    fn mcq_ignores_labels_beyond_option_count() {
        // With 4 options, an 'F' in prose is not an option token.
        let out = mcq_accuracy("grade F but choose B", 'B', 4).unwrap();
        assert_eq!(out.value, 1.0);
    }

    #[test]
    fn mcq_unparseable_scores_zero() {
        let out = mcq_accuracy("no option given here", 'A', 16).unwrap();
        assert_eq!(out.value, 0.0);
    }

    #[test]
    fn mcq_validates_configuration() {
        assert!(mcq_accuracy("x", 'Z', 16).is_err());
        assert!(mcq_accuracy("x", 'A', 1).is_err());
        assert!(mcq_accuracy("x", 'A', 27).is_err());
    }

    #[test]
    fn tolerance_boundary_table() {
        // Gold 12: errors of 8.33%, exactly 10%, and 10.83%.
        assert_eq!(tolerance_reward(13.0, 12.0, 0.10).unwrap().value, 1.0);
        assert_eq!(tolerance_reward(13.2, 12.0, 0.10).unwrap().value, 1.0);
        assert_eq!(tolerance_reward(13.3, 12.0, 0.10).unwrap().value, 0.0);
    }

    #[test]
    fn tolerance_handles_zero_and_negative_gold() {
        assert_eq!(tolerance_reward(0.0, 0.0, 0.10).unwrap().value, 1.0);
        assert_eq!(tolerance_reward(1e-9, 0.0, 0.10).unwrap().value, 0.0);
        assert_eq!(tolerance_reward(-10.5, -10.0, 0.10).unwrap().value, 1.0);
        assert_eq!(tolerance_reward(-11.5, -10.0, 0.10).unwrap().value, 0.0);
    }

    #[test]
    fn tolerance_rejects_non_finite() {
        assert!(tolerance_reward(f64::NAN, 1.0, 0.1).is_err());
        assert!(tolerance_reward(1.0, f64::INFINITY, 0.1).is_err());
        assert!(tolerance_reward(1.0, 1.0, -0.1).is_err());
    }

    proptest! {
        #[test]
        fn statute_f1_is_permutation_invariant(
            seed in 0u64..500,
        ) {
            // Distinct random-ish statures built from the seed; permuting
            // inputs must not change the score.
            let golds: Vec<String> = (0..4)
                .map(|i| format!("第{}条规定内容{}", seed * 4 + i, i))
                .collect();
            let preds: Vec<String> = vec![
                golds[2].clone(),
                format!("无关预测{seed}"),
                golds[0].clone(),
            ];
            let base = statute_f1(&preds, &golds, &CharUnits, 0.5).unwrap().value;
            let mut preds_r = preds.clone();
            preds_r.reverse();
            let mut golds_r = golds.clone();
            golds_r.reverse();
            let permuted = statute_f1(&preds_r, &golds_r, &CharUnits, 0.5).unwrap().value;
            prop_assert!((base - permuted).abs() < 1e-12);
        }

        #[test]
        fn rewards_stay_in_unit_interval(
            pred in "[abc]{0,30}",
            gold in "[abc]{1,30}",
            x in -100.0f64..100.0,
            y in -100.0f64..100.0,
        ) {
            let m = memorization_reward(&pred, &gold, &CharUnits).unwrap();
            prop_assert!((0.0..=1.0).contains(&m.value));
            let t = tolerance_reward(x, y, 0.10).unwrap();
            prop_assert!(t.value == 0.0 || t.value == 1.0);
            let f = statute_f1(std::slice::from_ref(&pred), std::slice::from_ref(&gold), &CharUnits, 0.5).unwrap();
            prop_assert!((0.0..=1.0).contains(&f.value));
        }
    }
}
