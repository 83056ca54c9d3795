//! Runs the three stability probes on a logistic model mid-training:
//! top curvature by power iteration, gradient-noise trace across batches,
//! and one-step update fidelity (how well a local quadratic model predicts
//! the actual loss change). Halving the step size shrinks the fidelity
//! error by roughly 8x, the signature of a third-order remainder.
//!
//! Run with: cargo run --example stability_probes

use midtrain::rng::{stream_rng, Stream};
use midtrain::sim::{
    curvature_probe, fidelity_probe, grad_noise_probe, run_probes, Batch, ModelSpec, ProbeState,
};
use rand::Rng;
use rand_distr::StandardNormal;

fn make_batch(dim: usize, n: usize, rng: &mut impl Rng) -> Batch {
    let teacher: Vec<f64> = (0..dim).map(|j| if j % 2 == 0 { 0.8 } else { -0.5 }).collect();
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let logit: f64 = x.iter().zip(&teacher).map(|(a, b)| a * b).sum();
        let p = 1.0 / (1.0 + (-logit).exp());
        ys.push(if rng.gen::<f64>() < p { 1.0 } else { 0.0 });
        xs.push(x);
    }
    Batch { xs, ys }
}

fn main() -> midtrain::Result<()> {
    let dim = 6;
    let mut rng = stream_rng(5, Stream::Probe);
    let spec = ModelSpec::Logistic { dim };
    let model = spec.build()?;
    let theta: Vec<f64> = (0..dim).map(|j| 0.1 * j as f64).collect();
    let train_batches: Vec<Batch> = (0..8).map(|_| make_batch(dim, 64, &mut rng)).collect();
    let val_batch = make_batch(dim, 512, &mut rng);

    let curv = curvature_probe(model.as_ref(), &theta, &train_batches[0], 1e-6, 200, &mut rng)?;
    println!(
        "top curvature: {:.6} ({} iterations, converged: {})",
        curv.top_eigenvalue, curv.iterations, curv.converged
    );

    let noise = grad_noise_probe(model.as_ref(), &theta, &train_batches)?;
    println!(
        "gradient noise trace over {} batches: {:.6}",
        train_batches.len(),
        noise.trace
    );

    println!();
    println!("{:>8} {:>14} {:>14} {:>12}", "eta", "predicted", "actual", "|error|");
    let mut last_err = None;
    for eta in [0.8, 0.4, 0.2] {
        let f = fidelity_probe(model.as_ref(), &theta, &train_batches[0], &val_batch, eta)?;
        let shrink = last_err
            .map(|e: f64| format!("  ({:.1}x smaller)", e / f.abs_error))
            .unwrap_or_default();
        println!(
            "{:>8.2} {:>14.8} {:>14.8} {:>12.2e}{shrink}",
            eta, f.predicted_delta, f.actual_delta, f.abs_error
        );
        last_err = Some(f.abs_error);
    }

    // The same diagnostics run from a serializable snapshot, which is what
    // the `midtrain probe` subcommand reads from disk.
    let state = ProbeState {
        model: spec,
        theta,
        train_batches,
        val_batch,
        eta: 0.2,
    };
    let probe = run_probes(&state, &mut rng)?;
    println!();
    println!("bundled probe from a snapshot:");
    println!("{}", serde_json::to_string_pretty(&probe).expect("probe serializes"));
    Ok(())
}
