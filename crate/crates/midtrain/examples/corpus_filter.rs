//! Builds a small synthetic corpus with the usual defects (near
//! duplicates, markup, too-short fragments, foreign-language synthetic
//! text, high perplexity, weak scores), runs it through the five-stage
//! filter chain, and prints the survivor accounting. The survivors are
//! then split into perplexity buckets and composed into a weighted
//! mixture manifest.
//!
//! Run with: cargo run --example corpus_filter

use midtrain::config::PipelineConfig;
use midtrain::corpus::{
    bucketize, dedup_minhash, heuristic_filter, mixture_compose, ppl_filter, threshold_gate,
    CorpusRecord, DomainManifest, FilterReport, JudgeScores, ScoreField, Source,
};

fn doc(id: &str, text: String, source: Source, ppl: f64, quality: f64) -> CorpusRecord {
    let mut r = CorpusRecord::new(id, text, source);
    r.ppl = Some(ppl);
    r.quality_score = Some(quality);
    r.judge_scores = Some(JudgeScores {
        reasoning_quality: 8,
        reasoning_consistency: 8,
        answer_reasoning_consistency: 8,
        conciseness: 7,
        linguistic: 9,
        overall: 8,
    });
    r
}

/// A long aperiodic clause built from one sentence: each copy carries its
/// own article number, so the text has no repeating shingle structure and
/// distinct sentences share almost no shingles.
fn clause(sentence: &str, salt: usize) -> String {
    (0..8)
        .map(|k| format!("第{}条の{} {}", salt * 10 + k, k, sentence))
        .collect()
}

fn main() -> midtrain::Result<()> {
    let phrases = [
        "裁判所は原告の請求を一部認容し被告に対し金員の支払を命じた",
        "本件契約は錯誤により取り消すことができると解するのが相当である",
        "被告の抗弁は時機に後れた攻撃防御方法として却下を免れない",
        "損害賠償の範囲は相当因果関係の認められる損害に限られる",
        "賃貸借契約の解除には信頼関係の破壊が認められる必要がある",
        "取締役は会社に対し善良な管理者の注意をもって職務を行う義務を負う",
        "和解契約が成立した場合には当事者は従前の主張を蒸し返すことができない",
        "保証人は主たる債務者の抗弁をもって債権者に対抗することができる",
    ];
    let mut corpus: Vec<CorpusRecord> = (0..6)
        .map(|i| {
            doc(
                &format!("doc_{i}"),
                clause(phrases[i], i),
                Source::Legal,
                4.0 + 4.0 * i as f64,
                4.2,
            )
        })
        .collect();

    // Defective records: a near duplicate of doc_0, markup that strips to a
    // clean survivor, a fragment, foreign synthetic text, and a weak score.
    corpus.push(doc("dup_0", format!("{}補足", clause(phrases[0], 0)), Source::Legal, 4.1, 4.0));
    corpus.push(doc(
        "markup",
        format!("<div><b>{}</b></div>", clause(phrases[6], 6)),
        Source::Legal,
        6.0,
        4.5,
    ));
    corpus.push(doc("fragment", "第一条".into(), Source::General, 3.0, 4.0));
    corpus.push(doc(
        "latin",
        "plaintiff seeks damages for breach of contract ".repeat(8),
        Source::SyntheticRephrase,
        5.0,
        4.0,
    ));
    corpus.push(doc("weak", clause(phrases[7], 7), Source::Legal, 7.0, 1.2));

    let p = PipelineConfig::default();
    println!(
        "{} records in; thresholds: min length {}, foreign ratio {}, ppl {}, quality {}, judge {}",
        corpus.len(),
        p.min_length,
        p.max_foreign_ratio,
        p.max_ppl,
        p.quality_min,
        p.judge_min
    );

    let mut report = FilterReport::default();
    let (corpus, stage) = dedup_minhash(corpus, &p.dedup, 42)?;
    report.push(stage)?;
    let (corpus, stage) = heuristic_filter(corpus, p.min_length, p.max_foreign_ratio)?;
    report.push(stage)?;
    let (corpus, stage) = ppl_filter(corpus, p.max_ppl)?;
    report.push(stage)?;
    let (corpus, stage) = threshold_gate(corpus, ScoreField::Quality, p.quality_min)?;
    report.push(stage)?;
    let (corpus, stage) = threshold_gate(corpus, ScoreField::Judge, p.judge_min)?;
    report.push(stage)?;

    println!();
    println!("{:<14} {:>8} {:>8} {:>10}", "stage", "input", "removed", "survivors");
    for s in &report.stages {
        println!("{:<14} {:>8} {:>8} {:>10}", s.stage, s.input, s.removed, s.survivors);
    }
    println!(
        "survivors: {:?}",
        corpus.iter().map(|r| r.id.as_str()).collect::<Vec<_>>()
    );

    let buckets = bucketize(&corpus, &p.bucket_boundaries)?;
    println!();
    for b in &buckets {
        let bound = b
            .upper_bound
            .map(|u| format!("ppl <= {u}"))
            .unwrap_or_else(|| "remainder".into());
        println!("bucket {} ({bound}): {:?}", b.bucket, b.ids);
    }

    let domains: Vec<DomainManifest> = buckets
        .into_iter()
        .map(|b| DomainManifest {
            name: format!("bucket_{}", b.bucket),
            ids: b.ids,
        })
        .collect();
    let composite = mixture_compose(&domains, &[2.0, 4.0, 4.0])?;
    println!();
    println!("composed mixture:");
    for d in &composite.domains {
        println!("  {:<10} weight {:.2} ({} records)", d.name, d.weight, d.ids.len());
    }
    Ok(())
}
