//! Stability probes: local curvature, gradient noise, and the fidelity of
//! a second-order step prediction.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::sim::model::{dot, Batch, DiffModel, ModelSpec};
use crate::Result;

/// Power-iteration estimate of the top Hessian eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureEstimate {
    /// Largest-magnitude eigenvalue of the Hessian at `theta`.
    pub top_eigenvalue: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Estimates the top Hessian eigenvalue by power iteration on
/// Hessian-vector products, stopping when the Rayleigh quotient moves by
/// less than `rel_tol` of its magnitude between iterations.
pub fn curvature_probe(
    model: &dyn DiffModel,
    theta: &[f64],
    batch: &Batch,
    rel_tol: f64,
    max_iters: usize,
    rng: &mut impl Rng,
) -> Result<CurvatureEstimate> {
    if !(rel_tol.is_finite() && rel_tol > 0.0) {
        return Err(Error::config("rel_tol", "must be finite and > 0"));
    }
    if max_iters == 0 {
        return Err(Error::config("max_iters", "must be >= 1"));
    }
    let d = model.dim();
    let mut v: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    normalize(&mut v)?;

    let mut prev = f64::NAN;
    for it in 1..=max_iters {
        let hv = model.hvp(theta, batch, &v)?;
        let lambda = dot(&v, &hv);
        let norm = l2(&hv);
        if norm < 1e-300 {
            // Hessian annihilates the iterate: curvature is zero along
            // every direction the start vector covered.
            return Ok(CurvatureEstimate {
                top_eigenvalue: 0.0,
                iterations: it,
                converged: true,
            });
        }
        v = hv;
        for x in &mut v {
            *x /= norm;
        }
        if !prev.is_nan() && (lambda - prev).abs() <= rel_tol * lambda.abs().max(1e-30) {
            return Ok(CurvatureEstimate {
                top_eigenvalue: lambda,
                iterations: it,
                converged: true,
            });
        }
        prev = lambda;
    }
    Ok(CurvatureEstimate {
        top_eigenvalue: prev,
        iterations: max_iters,
        converged: false,
    })
}

/// Unbiased estimate of the gradient-noise trace: the summed per-
/// coordinate variance of the batch gradient around its mean.
#[derive(Debug, Clone, PartialEq)]
pub struct GradNoiseEstimate {
    pub trace: f64,
    pub n_batches: usize,
}

/// Computes the sample variance of per-batch gradients over `batches`,
/// which requires at least two batches.
pub fn grad_noise_probe(
    model: &dyn DiffModel,
    theta: &[f64],
    batches: &[Batch],
) -> Result<GradNoiseEstimate> {
    if batches.len() < 2 {
        return Err(Error::InvalidInput(
            "gradient noise needs at least two batches".into(),
        ));
    }
    let grads: Vec<Vec<f64>> = batches
        .iter()
        .map(|b| model.grad(theta, b))
        .collect::<Result<_>>()?;
    let d = model.dim();
    let n = grads.len() as f64;
    let mut mean = vec![0.0; d];
    for g in &grads {
        for (m, gi) in mean.iter_mut().zip(g) {
            *m += gi / n;
        }
    }
    let trace = grads
        .iter()
        .map(|g| {
            g.iter()
                .zip(&mean)
                .map(|(gi, m)| (gi - m) * (gi - m))
                .sum::<f64>()
        })
        .sum::<f64>()
        / (n - 1.0);
    Ok(GradNoiseEstimate {
        trace,
        n_batches: grads.len(),
    })
}

/// How well a first-plus-second-order expansion predicts the validation
/// loss change of one SGD step.
#[derive(Debug, Clone, PartialEq)]
pub struct FidelityReport {
    /// Inner product of the validation gradient with the training step
    /// direction; positive means the step helps validation loss.
    pub alignment: f64,
    /// Validation-Hessian energy of the step direction.
    pub curvature_energy: f64,
    /// Predicted validation loss change for step size `eta`.
    pub predicted_delta: f64,
    /// Observed validation loss change after actually taking the step.
    pub actual_delta: f64,
    pub abs_error: f64,
}

/// Takes one gradient step of size `eta` on `train_batch` and compares the
/// observed validation loss change against its second-order prediction.
/// On a quadratic surface prediction and observation agree to rounding;
/// elsewhere the gap shrinks cubically in `eta`.
pub fn fidelity_probe(
    model: &dyn DiffModel,
    theta: &[f64],
    train_batch: &Batch,
    val_batch: &Batch,
    eta: f64,
) -> Result<FidelityReport> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::config("eta", "must be finite and > 0"));
    }
    let g = model.grad(theta, train_batch)?;
    let val_grad = model.grad(theta, val_batch)?;
    let alignment = dot(&val_grad, &g);
    let hg = model.hvp(theta, val_batch, &g)?;
    let curvature_energy = dot(&g, &hg);
    let predicted_delta = -eta * alignment + 0.5 * eta * eta * curvature_energy;

    let stepped: Vec<f64> = theta.iter().zip(&g).map(|(t, gi)| t - eta * gi).collect();
    let actual_delta = model.loss(&stepped, val_batch)? - model.loss(theta, val_batch)?;
    Ok(FidelityReport {
        alignment,
        curvature_energy,
        predicted_delta,
        actual_delta,
        abs_error: (predicted_delta - actual_delta).abs(),
    })
}

/// A saved model state the diagnostics can run against: the model family,
/// the current parameters, training minibatches (the first one defines
/// the step for the fidelity check, all of them feed the noise estimate),
/// a validation batch, and the step size to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeState {
    pub model: ModelSpec,
    pub theta: Vec<f64>,
    pub train_batches: Vec<Batch>,
    pub val_batch: Batch,
    pub eta: f64,
}

/// All three diagnostics on one state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityProbe {
    pub lambda_max: f64,
    pub curvature_converged: bool,
    pub curvature_iterations: usize,
    pub grad_noise_trace: f64,
    pub noise_batches: usize,
    pub alignment: f64,
    pub curvature_energy: f64,
    pub predicted_delta: f64,
    pub actual_delta: f64,
    pub prediction_error: f64,
}

/// Runs curvature, noise, and fidelity probes on a saved state. The
/// curvature probe uses the first training batch; pass at least two
/// batches so the noise estimate is defined.
pub fn run_probes(state: &ProbeState, rng: &mut impl Rng) -> Result<StabilityProbe> {
    let model = state.model.build()?;
    let first = state
        .train_batches
        .first()
        .ok_or_else(|| Error::InvalidInput("probe state has no training batches".into()))?;
    let curvature = curvature_probe(model.as_ref(), &state.theta, first, 1e-6, 200, rng)?;
    let noise = grad_noise_probe(model.as_ref(), &state.theta, &state.train_batches)?;
    let fidelity = fidelity_probe(
        model.as_ref(),
        &state.theta,
        first,
        &state.val_batch,
        state.eta,
    )?;
    Ok(StabilityProbe {
        lambda_max: curvature.top_eigenvalue,
        curvature_converged: curvature.converged,
        curvature_iterations: curvature.iterations,
        grad_noise_trace: noise.trace,
        noise_batches: noise.n_batches,
        alignment: fidelity.alignment,
        curvature_energy: fidelity.curvature_energy,
        predicted_delta: fidelity.predicted_delta,
        actual_delta: fidelity.actual_delta,
        prediction_error: fidelity.abs_error,
    })
}

fn l2(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

fn normalize(v: &mut [f64]) -> Result<()> {
    let n = l2(v);
    if n < 1e-300 {
        return Err(Error::InvalidInput("degenerate start vector".into()));
    }
    for x in v.iter_mut() {
        *x /= n;
    }
    Ok(())
}
