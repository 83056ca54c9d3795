//! Runs the four curriculum schedules on the default synthetic task and
//! compares forgetting. Shows that front-loading the hardest stratum
//! (descending) damages the original-distribution loss in a way the later
//! phases never repair, while a short anchor phase followed by a blend
//! (two-stage hybrid) tracks the static mixture closely.
//!
//! Run with: cargo run --example forgetting_sim [seed]

use midtrain::sampling::{schedule_preset, MixturePolicy, PresetKind};
use midtrain::schedule::WsdSchedule;
use midtrain::sim::{forgetting_report, run_sim, SimOptions, SyntheticTask};

fn main() -> midtrain::Result<()> {
    let seed: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse().expect("seed must be an integer"))
        .unwrap_or(7);

    let steps = 5_000;
    let task = SyntheticTask::default();
    let schedule = WsdSchedule {
        warmup_steps: 500,
        stable_steps: 4_000,
        decay_steps: 500,
        ..WsdSchedule::default()
    };
    let options = SimOptions::default();

    println!("synthetic task, {steps} steps, seed {seed}");
    println!("reference losses per stratum: {:?}", task.reference_losses());
    println!();
    println!(
        "{:<18} {:>12} {:>12} {:>12} {:>10}",
        "schedule", "initial val", "final val", "max rise", "peak step"
    );

    for kind in [
        PresetKind::StaticMixture,
        PresetKind::Ascending,
        PresetKind::Descending,
        PresetKind::TwoStageHybrid,
    ] {
        let policy = MixturePolicy::Preset(schedule_preset(kind, steps)?);
        let trace = run_sim(&task, &schedule, &policy, steps, 100, seed, &options)?;
        let rep = forgetting_report(&trace)?;
        println!(
            "{:<18} {:>12.5} {:>12.5} {:>12.5} {:>10}",
            format!("{kind:?}"),
            rep.initial_val_loss,
            rep.final_val_loss,
            rep.max_rise,
            rep.peak_step
        );
    }
    Ok(())
}
