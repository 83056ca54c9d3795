//! Shows how plasticity-adjusted sampling moves probability mass. At low
//! plasticity nearly all mass sits on the anchor bucket; as plasticity
//! recovers, the distribution relaxes to the configured target weights.
//! Also prints the four fixed curriculum presets for contrast and draws a
//! reproducible batch from the blended distribution.
//!
//! Run with: cargo run --example pas_plan

use midtrain::rng::{stream_rng, Stream};
use midtrain::sampling::{
    bucket_probs, draw_batch, schedule_preset, BucketSpec, PasConfig, PresetKind,
};

fn main() -> midtrain::Result<()> {
    let cfg = PasConfig::default().validated()?;
    println!(
        "targets {:?}, anchor boost lambda = {}",
        cfg.target_weights, cfg.lambda
    );
    println!();
    println!("{:>6} {:>10} {:>10} {:>10}", "alpha", "anchor", "mid", "hard");
    for i in 0..=4 {
        let alpha = i as f64 / 4.0;
        let p = bucket_probs(&cfg, alpha)?;
        println!("{:>6.2} {:>10.6} {:>10.6} {:>10.6}", alpha, p[0], p[1], p[2]);
    }

    let total = 9_000;
    println!();
    println!("fixed presets over {total} steps (mixture at selected steps):");
    for kind in [
        PresetKind::StaticMixture,
        PresetKind::Ascending,
        PresetKind::Descending,
        PresetKind::TwoStageHybrid,
    ] {
        let preset = schedule_preset(kind, total)?;
        let mut cells = Vec::new();
        for t in [0, total / 3, 2 * total / 3, total] {
            cells.push(format!("t={t}: {:?}", preset.mixture_at(t)?));
        }
        println!("  {:<16} {}", format!("{kind:?}"), cells.join("  "));
    }

    let buckets = vec![
        BucketSpec {
            index: 0,
            name: "anchor".into(),
            records: (0..40).map(|i| format!("a{i:02}")).collect(),
        },
        BucketSpec {
            index: 1,
            name: "mid".into(),
            records: (0..40).map(|i| format!("m{i:02}")).collect(),
        },
        BucketSpec {
            index: 2,
            name: "hard".into(),
            records: (0..40).map(|i| format!("h{i:02}")).collect(),
        },
    ];
    let probs = bucket_probs(&cfg, 0.5)?;
    let mut rng = stream_rng(11, Stream::Sampler);
    let batch = draw_batch(&buckets, &probs, 16, &mut rng)?;
    println!();
    println!("sample batch at alpha=0.5 (seed 11): {:?}", batch);
    Ok(())
}
