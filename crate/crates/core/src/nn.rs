//! Parameter bookkeeping and the scalar building blocks (dense layers, layer
//! norm, activations) shared by the equivariant layers.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{shape, Result};

/// How a parameter tensor is initialised.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRole {
    /// Uniform in `±sqrt(3 / fan_in)`.
    Weight { fan_in: usize },
    /// Zero.
    Bias,
    /// One (norm scales).
    Gain,
    /// Standard normal (embedding tables).
    Embedding,
}

/// Callback receiving `(name, role, shape, values)`; values of matrices are
/// column-major.
pub type ParamVisitor<'a> = dyn FnMut(&str, ParamRole, &[usize], &mut [f64]) + 'a;

/// Anything holding named parameter tensors.
pub trait Params {
    /// Visit every tensor in a fixed order, names prefixed by `prefix`.
    fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor<'_>);
}

pub(crate) fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

pub(crate) fn visit_matrix(
    prefix: &str,
    name: &str,
    role: ParamRole,
    m: &mut DMatrix<f64>,
    f: &mut ParamVisitor<'_>,
) {
    let dims = [m.nrows(), m.ncols()];
    f(&join(prefix, name), role, &dims, m.as_mut_slice());
}

pub(crate) fn visit_vector(
    prefix: &str,
    name: &str,
    role: ParamRole,
    v: &mut DVector<f64>,
    f: &mut ParamVisitor<'_>,
) {
    let dims = [v.len()];
    f(&join(prefix, name), role, &dims, v.as_mut_slice());
}

/// Fill every parameter according to its role.
pub fn initialize<P: Params + ?Sized, R: Rng + ?Sized>(module: &mut P, rng: &mut R) {
    module.visit_params("", &mut |_, role, _, values| match role {
        ParamRole::Weight { fan_in } => {
            let bound = (3.0 / fan_in.max(1) as f64).sqrt();
            for v in values.iter_mut() {
                *v = rng.random_range(-bound..bound);
            }
        }
        ParamRole::Bias => values.fill(0.0),
        ParamRole::Gain => values.fill(1.0),
        ParamRole::Embedding => {
            for v in values.iter_mut() {
                *v = rng.sample(rand_distr::StandardNormal);
            }
        }
    });
}

/// Set every parameter to zero.
pub fn zero_params<P: Params + ?Sized>(module: &mut P) {
    module.visit_params("", &mut |_, _, _, values| values.fill(0.0));
}

/// Total number of scalars.
pub fn count_params<P: Params + ?Sized>(module: &mut P) -> usize {
    let mut n = 0;
    module.visit_params("", &mut |_, _, _, values| n += values.len());
    n
}

pub fn silu(x: f64) -> f64 {
    x / (1.0 + (-x).exp())
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        slope * x
    }
}

/// Dense affine map on plain vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: DMatrix<f64>,
    pub bias: Option<DVector<f64>>,
}

impl Linear {
    pub fn new(d_in: usize, d_out: usize, bias: bool) -> Linear {
        Linear {
            weight: DMatrix::zeros(d_out, d_in),
            bias: bias.then(|| DVector::zeros(d_out)),
        }
    }

    pub fn d_in(&self) -> usize {
        self.weight.ncols()
    }

    pub fn d_out(&self) -> usize {
        self.weight.nrows()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d_in() {
            return Err(shape(format!(
                "linear layer expects {} inputs, got {}",
                self.d_in(),
                x.len()
            )));
        }
        let mut y = &self.weight * DVector::from_column_slice(x);
        if let Some(b) = &self.bias {
            y += b;
        }
        Ok(y.data.into())
    }
}

impl Params for Linear {
    fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor<'_>) {
        let fan_in = self.d_in();
        visit_matrix(prefix, "weight", ParamRole::Weight { fan_in }, &mut self.weight, f);
        if let Some(b) = &mut self.bias {
            visit_vector(prefix, "bias", ParamRole::Bias, b, f);
        }
    }
}

/// Floor applied to standard deviations and RMS values before dividing.
pub const NORM_EPS: f64 = 1e-8;

/// Standard layer normalisation over a vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub gamma: DVector<f64>,
    pub beta: DVector<f64>,
}

impl LayerNorm {
    pub fn new(d: usize) -> LayerNorm {
        LayerNorm {
            gamma: DVector::from_element(d, 1.0),
            beta: DVector::zeros(d),
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(shape(format!(
                "layer norm expects {} inputs, got {}",
                self.dim(),
                x.len()
            )));
        }
        let mut y = standardize(x);
        for (i, v) in y.iter_mut().enumerate() {
            *v = self.gamma[i] * *v + self.beta[i];
        }
        Ok(y)
    }
}

impl Params for LayerNorm {
    fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor<'_>) {
        visit_vector(prefix, "gamma", ParamRole::Gain, &mut self.gamma, f);
        visit_vector(prefix, "beta", ParamRole::Bias, &mut self.beta, f);
    }
}

/// `(x - mean) / max(std, NORM_EPS)` with the population standard deviation.
pub fn standardize(x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sigma = var.sqrt().max(NORM_EPS);
    x.iter().map(|v| (v - mean) / sigma).collect()
}
