//! Small differentiable models with exact gradients and Hessian-vector
//! products, used by the training simulator and the stability probes.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// A labelled batch: one feature row per target.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Batch {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InvalidInput("empty batch".into()));
        }
        if self.xs.len() != self.ys.len() {
            return Err(Error::InvalidInput(format!(
                "{} feature rows for {} targets",
                self.xs.len(),
                self.ys.len()
            )));
        }
        if let Some(row) = self.xs.iter().find(|r| r.len() != dim) {
            return Err(Error::InvalidInput(format!(
                "feature row of length {} in a dim-{dim} model",
                row.len()
            )));
        }
        Ok(())
    }
}

/// Loss surface with analytic first and second order information.
pub trait DiffModel {
    fn dim(&self) -> usize;
    /// Mean loss over the batch.
    fn loss(&self, theta: &[f64], batch: &Batch) -> Result<f64>;
    /// Gradient of [`Self::loss`] in `theta`.
    fn grad(&self, theta: &[f64], batch: &Batch) -> Result<Vec<f64>>;
    /// Hessian-vector product of [`Self::loss`] at `theta` applied to `v`.
    fn hvp(&self, theta: &[f64], batch: &Batch, v: &[f64]) -> Result<Vec<f64>>;
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_vec(name: &str, v: &[f64], dim: usize) -> Result<()> {
    if v.len() != dim {
        return Err(Error::InvalidInput(format!(
            "{name} has length {} but model dim is {dim}",
            v.len()
        )));
    }
    Ok(())
}

/// Squared-error linear model: loss = mean over the batch of
/// (theta . x - y)^2 / 2.
#[derive(Debug, Clone)]
pub struct LinearRegression {
    pub dim: usize,
}

impl DiffModel for LinearRegression {
    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, theta: &[f64], batch: &Batch) -> Result<f64> {
        check_vec("theta", theta, self.dim)?;
        batch.validate(self.dim)?;
        let n = batch.len() as f64;
        let sum: f64 = batch
            .xs
            .iter()
            .zip(&batch.ys)
            .map(|(x, y)| {
                let r = dot(theta, x) - y;
                r * r
            })
            .sum();
        Ok(sum / (2.0 * n))
    }

    fn grad(&self, theta: &[f64], batch: &Batch) -> Result<Vec<f64>> {
        check_vec("theta", theta, self.dim)?;
        batch.validate(self.dim)?;
        let n = batch.len() as f64;
        let mut g = vec![0.0; self.dim];
        for (x, y) in batch.xs.iter().zip(&batch.ys) {
            let r = dot(theta, x) - y;
            for (gi, xi) in g.iter_mut().zip(x) {
                *gi += r * xi / n;
            }
        }
        Ok(g)
    }

    fn hvp(&self, theta: &[f64], batch: &Batch, v: &[f64]) -> Result<Vec<f64>> {
        check_vec("theta", theta, self.dim)?;
        check_vec("v", v, self.dim)?;
        batch.validate(self.dim)?;
        let n = batch.len() as f64;
        let mut out = vec![0.0; self.dim];
        for x in &batch.xs {
            let xv = dot(x, v);
            for (oi, xi) in out.iter_mut().zip(x) {
                *oi += xv * xi / n;
            }
        }
        Ok(out)
    }
}

/// Binary cross-entropy with logits theta . x; targets in {0, 1}.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    pub dim: usize,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl DiffModel for LogisticRegression {
    fn dim(&self) -> usize {
        self.dim
    }

    fn loss(&self, theta: &[f64], batch: &Batch) -> Result<f64> {
        check_vec("theta", theta, self.dim)?;
        batch.validate(self.dim)?;
        if batch.ys.iter().any(|y| *y != 0.0 && *y != 1.0) {
            return Err(Error::InvalidInput("logistic targets must be 0 or 1".into()));
        }
        let n = batch.len() as f64;
        // log(1 + e^z) - y z, computed in the stable branch for each sign.
        let sum: f64 = batch
            .xs
            .iter()
            .zip(&batch.ys)
            .map(|(x, y)| {
                let z = dot(theta, x);
                let log1pe = if z > 0.0 {
                    z + (-z).exp().ln_1p()
                } else {
                    z.exp().ln_1p()
                };
                log1pe - y * z
            })
            .sum();
        Ok(sum / n)
    }

    fn grad(&self, theta: &[f64], batch: &Batch) -> Result<Vec<f64>> {
        check_vec("theta", theta, self.dim)?;
        batch.validate(self.dim)?;
        let n = batch.len() as f64;
        let mut g = vec![0.0; self.dim];
        for (x, y) in batch.xs.iter().zip(&batch.ys) {
            let p = sigmoid(dot(theta, x));
            for (gi, xi) in g.iter_mut().zip(x) {
                *gi += (p - y) * xi / n;
            }
        }
        Ok(g)
    }

    fn hvp(&self, theta: &[f64], batch: &Batch, v: &[f64]) -> Result<Vec<f64>> {
        check_vec("theta", theta, self.dim)?;
        check_vec("v", v, self.dim)?;
        batch.validate(self.dim)?;
        let n = batch.len() as f64;
        let mut out = vec![0.0; self.dim];
        for x in &batch.xs {
            let p = sigmoid(dot(theta, x));
            let w = p * (1.0 - p) * dot(x, v);
            for (oi, xi) in out.iter_mut().zip(x) {
                *oi += w * xi / n;
            }
        }
        Ok(out)
    }
}

/// Fixed quadratic surface loss = theta^T A theta / 2 - b . theta. The
/// batch argument is ignored; second-order Taylor expansion is exact here,
/// which pins down what the fidelity probe should report.
#[derive(Debug, Clone)]
pub struct Quadratic {
    /// Symmetric matrix, row-major.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

impl Quadratic {
    /// Diagonal surface with no linear term.
    pub fn diagonal(diag: &[f64]) -> Self {
        let d = diag.len();
        let mut a = vec![vec![0.0; d]; d];
        for (i, &v) in diag.iter().enumerate() {
            a[i][i] = v;
        }
        Quadratic {
            a,
            b: vec![0.0; d],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.b.len();
        if self.a.len() != d || self.a.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidInput("quadratic matrix is not square".into()));
        }
        for i in 0..d {
            for j in 0..i {
                if (self.a[i][j] - self.a[j][i]).abs() > 1e-12 {
                    return Err(Error::InvalidInput(
                        "quadratic matrix must be symmetric".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.a.iter().map(|row| dot(row, v)).collect()
    }
}

impl DiffModel for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn loss(&self, theta: &[f64], _batch: &Batch) -> Result<f64> {
        check_vec("theta", theta, self.dim())?;
        let av = self.apply(theta);
        Ok(0.5 * dot(theta, &av) - dot(&self.b, theta))
    }

    fn grad(&self, theta: &[f64], _batch: &Batch) -> Result<Vec<f64>> {
        check_vec("theta", theta, self.dim())?;
        let mut g = self.apply(theta);
        for (gi, bi) in g.iter_mut().zip(&self.b) {
            *gi -= bi;
        }
        Ok(g)
    }

    fn hvp(&self, _theta: &[f64], _batch: &Batch, v: &[f64]) -> Result<Vec<f64>> {
        check_vec("v", v, self.dim())?;
        Ok(self.apply(v))
    }
}

/// Serializable description of a model, for saved probe states.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Linear { dim: usize },
    Logistic { dim: usize },
    Quadratic { a: Vec<Vec<f64>>, b: Vec<f64> },
}

impl ModelSpec {
    pub fn build(&self) -> Result<Box<dyn DiffModel>> {
        match self {
            ModelSpec::Linear { dim } => {
                if *dim == 0 {
                    return Err(Error::config("model.dim", "must be >= 1"));
                }
                Ok(Box::new(LinearRegression { dim: *dim }))
            }
            ModelSpec::Logistic { dim } => {
                if *dim == 0 {
                    return Err(Error::config("model.dim", "must be >= 1"));
                }
                Ok(Box::new(LogisticRegression { dim: *dim }))
            }
            ModelSpec::Quadratic { a, b } => {
                let q = Quadratic {
                    a: a.clone(),
                    b: b.clone(),
                };
                q.validate()?;
                Ok(Box::new(q))
            }
        }
    }
}
