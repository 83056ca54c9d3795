//! Tabulates a warmup-stable-decay learning-rate schedule and the
//! plasticity coefficient it induces. Shows the exact boundary values
//! (peak at the end of warmup, minimum at the last step) and how the
//! linear and cosine decay shapes differ in between.
//!
//! Run with: cargo run --example schedule_curve

use midtrain::schedule::{DecayShape, WsdSchedule};

fn main() -> midtrain::Result<()> {
    let base = WsdSchedule::default();
    let cosine = WsdSchedule {
        decay_shape: DecayShape::Cosine,
        ..base.clone()
    };
    base.validate()?;
    cosine.validate()?;

    let total = base.total_steps();
    println!(
        "warmup {} / stable {} / decay {} ({total} steps), peak {} -> min {}",
        base.warmup_steps, base.stable_steps, base.decay_steps, base.peak_lr, base.min_lr
    );
    println!();
    println!(
        "{:>6} {:>14} {:>14} {:>8}",
        "step", "lr (linear)", "lr (cosine)", "alpha"
    );

    let marks = [
        0,
        base.warmup_steps / 2,
        base.warmup_steps,
        total / 2,
        base.warmup_steps + base.stable_steps,
        total - base.decay_steps / 2,
        total - 1,
        total,
    ];
    for t in marks {
        println!(
            "{:>6} {:>14.6e} {:>14.6e} {:>8.4}",
            t,
            base.lr_at(t)?,
            cosine.lr_at(t)?,
            base.plasticity_at(t)?
        );
    }

    println!();
    println!(
        "boundary checks: lr(warmup end) == peak: {}, lr(total) == min: {}",
        base.lr_at(base.warmup_steps)? == base.peak_lr,
        base.lr_at(total)? == base.min_lr
    );
    Ok(())
}
