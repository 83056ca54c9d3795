//! Scores one worked example per curriculum stage: statute recitation,
//! multiple choice, statute extraction, numeric judgment, and rubric-based
//! document drafting. Each stage returns the scalar reward plus the
//! diagnostics explaining it.
//!
//! Run with: cargo run --example reward_scoring

use midtrain::reward::{
    mcq_accuracy, memorization_reward, rubric_score, statute_f1, tolerance_reward, CharUnits,
    Criterion, KeywordJudge,
};

fn main() -> midtrain::Result<()> {
    let tok = CharUnits;

    let reference = "詐欺又は強迫による意思表示は、取り消すことができる。";
    let close = "詐欺又は強迫による意思表示は取り消すことができる";
    let r = memorization_reward(close, reference, &tok)?;
    println!("memorization (near-verbatim recitation): {:.4}", r.value);
    println!("  {:?}", r.detail);

    let response = "各選択肢を検討すると、AとDは条文に反する。正解は (C) である。";
    let r = mcq_accuracy(response, 'C', 5)?;
    println!();
    println!("application (multiple choice, gold C): {:.1}", r.value);
    println!("  {:?}", r.detail);

    let predictions = vec!["民法第五百五十五条".to_string(), "民法第七百九条".to_string()];
    let golds = vec!["民法第五百五十五条".to_string(), "民法第四百十五条".to_string()];
    let r = statute_f1(&predictions, &golds, &tok, 0.7)?;
    println!();
    println!("case analysis (statute extraction F1): {:.4}", r.value);
    println!("  {:?}", r.detail);

    let r = tolerance_reward(1_050_000.0, 1_000_000.0, 0.1)?;
    println!();
    println!("judgment (damages within 10% of gold): {:.1}", r.value);
    println!("  {:?}", r.detail);

    let document = "本契約書は売買の目的物および代金の支払方法を定め、\
                    危険負担は引渡しの時に移転するものとし、管轄は東京地方裁判所とする。";
    let rubric = vec![
        Criterion {
            name: "subject matter".into(),
            keywords: vec!["目的物".into(), "代金".into()],
        },
        Criterion {
            name: "risk allocation".into(),
            keywords: vec!["危険負担".into()],
        },
        Criterion {
            name: "termination".into(),
            keywords: vec!["解除".into()],
        },
    ];
    let r = rubric_score(document, &rubric, &KeywordJudge)?;
    println!();
    println!("document (keyword rubric, 2 of 3 criteria met): {:.4}", r.value);
    println!("  {:?}", r.detail);
    Ok(())
}
