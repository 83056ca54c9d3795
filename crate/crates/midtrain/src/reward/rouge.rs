//! ROUGE-L over pluggable tokenization units.
//!
//! Scores are F-measures of the longest common subsequence between the
//! prediction's and the reference's unit sequences. The default unit is
//! the unicode scalar value, which behaves sensibly for CJK text where
//! whitespace tokenization degenerates; a whitespace tokenizer is provided
//! for space-delimited corpora.

use crate::error::Error;
use crate::Result;

/// Splits text into the atomic units ROUGE-L compares.
pub trait UnitTokenizer {
    fn units<'a>(&self, text: &'a str) -> Vec<&'a str>;
}

/// One unit per unicode scalar value. The default.
#[derive(Debug, Clone, Copy, Default)]
pub struct CharUnits;

impl UnitTokenizer for CharUnits {
    fn units<'a>(&self, text: &'a str) -> Vec<&'a str> {
        let mut out = Vec::with_capacity(text.len());
        let mut iter = text.char_indices().peekable();
        while let Some((start, _)) = iter.next() {
            let end = iter.peek().map_or(text.len(), |&(i, _)| i);
            out.push(&text[start..end]);
        }
        out
    }
}

/// Whitespace-delimited units, for space-separated text.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceUnits;

impl UnitTokenizer for WhitespaceUnits {
    fn units<'a>(&self, text: &'a str) -> Vec<&'a str> {
        text.split_whitespace().collect()
    }
}

/// Length of the longest common subsequence of `a` and `b`.
///
/// Rolling single-row DP: O(len(a) * len(b)) time, O(min) space.
pub fn lcs_len(a: &[&str], b: &[&str]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return 0;
    }
    let mut row = vec![0usize; short.len() + 1];
    for &lu in long {
        let mut diag = 0;
        for (j, &su) in short.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if lu == su {
                diag + 1
            } else {
                above.max(row[j])
            };
            diag = above;
        }
    }
    row[short.len()]
}

/// ROUGE-L F-measure between unit sequences, plus the LCS length.
///
/// Precision is LCS over the prediction length, recall is LCS over the
/// reference length. An empty reference is an error; an empty prediction
/// scores 0. The score is 1 exactly when the sequences are identical.
pub fn rouge_l_units(pred: &[&str], reference: &[&str]) -> Result<(f64, usize)> {
    if reference.is_empty() {
        return Err(Error::InvalidInput(
            "rouge: reference has no units".into(),
        ));
    }
    if pred.is_empty() {
        return Ok((0.0, 0));
    }
    let lcs = lcs_len(pred, reference);
    if lcs == 0 {
        return Ok((0.0, 0));
    }
    let p = lcs as f64 / pred.len() as f64;
    let r = lcs as f64 / reference.len() as f64;
    Ok((2.0 * p * r / (p + r), lcs))
}

/// ROUGE-L F-measure between two texts under `tok`.
pub fn rouge_l(pred: &str, reference: &str, tok: &dyn UnitTokenizer) -> Result<f64> {
    let (f, _) = rouge_l_units(&tok.units(pred), &tok.units(reference))?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_sequences_score_one() {
        assert_eq!(rouge_l("abcd", "abcd", &CharUnits).unwrap(), 1.0);
        assert_eq!(rouge_l("条文内容", "条文内容", &CharUnits).unwrap(), 1.0);
    }

    #[test]
    fn one_substitution_in_four() {
        // LCS("abcd", "abed") = 3, P = R = 3/4.
        let f = rouge_l("abcd", "abed", &CharUnits).unwrap();
        assert!((f - 0.75).abs() < 1e-12);
    }

    #[test]
    fn empty_prediction_scores_zero() {
        assert_eq!(rouge_l("", "abcd", &CharUnits).unwrap(), 0.0);
    }

    #[test]
    fn empty_reference_errors() {
        assert!(rouge_l("abcd", "", &CharUnits).is_err());
    }

    #[test]
    fn disjoint_texts_score_zero() {
        assert_eq!(rouge_l("abc", "xyz", &CharUnits).unwrap(), 0.0);
    }

    #[test]
    fn cjk_units_are_per_char() {
        let units = CharUnits.units("第三十条");
        assert_eq!(units, vec!["第", "三", "十", "条"]);
        let f = rouge_l("第三十条", "第三十一条", &CharUnits).unwrap();
        // LCS = 4, P = 1, R = 4/5.
        assert!((f - 2.0 * (4.0 / 5.0) / (1.0 + 4.0 / 5.0)).abs() < 1e-12);
    }

    #[test]
    fn whitespace_units_split_words() {
        let units = WhitespaceUnits.units("the  quick\tfox");
        assert_eq!(units, vec!["the", "quick", "fox"]);
        assert_eq!(rouge_l("the quick fox", "the quick fox", &WhitespaceUnits).unwrap(), 1.0);
    }

    #[test]
    fn lcs_handles_classic_cases() {
        let a: Vec<&str> = "ABCBDAB".split("").filter(|s| !s.is_empty()).collect();
        let b: Vec<&str> = "BDCABA".split("").filter(|s| !s.is_empty()).collect();
        assert_eq!(lcs_len(&a, &b), 4);
        assert_eq!(lcs_len(&[], &a), 0);
    }

    proptest! {
        #[test]
        fn score_is_bounded_and_symmetric(
            a in "[ab]{1,40}",
            b in "[ab]{1,40}",
        ) {
            let f_ab = rouge_l(&a, &b, &CharUnits).unwrap();
            let f_ba = rouge_l(&b, &a, &CharUnits).unwrap();
            prop_assert!((0.0..=1.0).contains(&f_ab));
            prop_assert!((f_ab - f_ba).abs() < 1e-12);
        }

        #[test]
        fn score_is_one_iff_identical(
            a in "[abc]{1,20}",
            b in "[abc]{1,20}",
        ) {
            let f = rouge_l(&a, &b, &CharUnits).unwrap();
            if a == b {
                prop_assert_eq!(f, 1.0);
            } else {
                prop_assert!(f < 1.0);
            }
        }

        #[test]
        fn lcs_is_at_most_either_length(
            a in proptest::collection::vec("[xyz]", 0..30),
            b in proptest::collection::vec("[xyz]", 1..30),
        ) {
            let av: Vec<&str> = a.iter().map(|s| s.as_str()).collect();
            let bv: Vec<&str> = b.iter().map(|s| s.as_str()).collect();
            let l = lcs_len(&av, &bv);
            prop_assert!(l <= av.len() && l <= bv.len());
        }
    }
}
