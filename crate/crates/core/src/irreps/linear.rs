use nalgebra::{DMatrix, DVector};

use super::feature::{IrrepsFeature, IrrepsLayout};
use crate::error::{shape, Result};
use crate::nn::{visit_matrix, visit_vector, ParamRole, ParamVisitor, Params};

/// Degree-wise linear map: `y⁽ᴸ⁾ = W⁽ᴸ⁾ x⁽ᴸ⁾`, with a bias on degree 0 only.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivariantLinear {
    /// One `C_out × C_in` matrix per degree.
    pub weights: Vec<DMatrix<f64>>,
    pub bias: Option<DVector<f64>>,
}

impl EquivariantLinear {
    pub fn new(l_max: usize, c_in: usize, c_out: usize, bias: bool) -> EquivariantLinear {
        EquivariantLinear {
            weights: vec![DMatrix::zeros(c_out, c_in); l_max + 1],
            bias: bias.then(|| DVector::zeros(c_out)),
        }
    }

    /// Identity weights and zero bias.
    pub fn identity(l_max: usize, channels: usize) -> EquivariantLinear {
        EquivariantLinear {
            weights: vec![DMatrix::identity(channels, channels); l_max + 1],
            bias: Some(DVector::zeros(channels)),
        }
    }

    pub fn l_max(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn c_in(&self) -> usize {
        self.weights[0].ncols()
    }

    pub fn c_out(&self) -> usize {
        self.weights[0].nrows()
    }

    pub fn forward(&self, x: &IrrepsFeature) -> Result<IrrepsFeature> {
        equivariant_linear(x, &self.weights, self.bias.as_ref())
    }
}

impl Params for EquivariantLinear {
    fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor<'_>) {
        for (l, w) in self.weights.iter_mut().enumerate() {
            let fan_in = w.ncols();
            visit_matrix(prefix, &format!("weight{l}"), ParamRole::Weight { fan_in }, w, f);
        }
        if let Some(b) = &mut self.bias {
            visit_vector(prefix, "bias", ParamRole::Bias, b, f);
        }
    }
}

/// Apply `weights[L]` to every degree of `x`; `bias` is added to degree 0.
pub fn equivariant_linear(
    x: &IrrepsFeature,
    weights: &[DMatrix<f64>],
    bias: Option<&DVector<f64>>,
) -> Result<IrrepsFeature> {
    if weights.len() != x.l_max() + 1 {
        return Err(shape(format!(
            "{} weight matrices for a feature with L_max {}",
            weights.len(),
            x.l_max()
        )));
    }
    let c_out = weights[0].nrows();
    for (l, w) in weights.iter().enumerate() {
        if w.ncols() != x.channels() || w.nrows() != c_out {
            return Err(shape(format!(
                "degree {l} weight is {}×{}, expected {c_out}×{}",
                w.nrows(),
                w.ncols(),
                x.channels()
            )));
        }
    }
    if let Some(b) = bias {
        if b.len() != c_out {
            return Err(shape(format!("bias has {} entries, expected {c_out}", b.len())));
        }
    }
    let mut out = IrrepsFeature::zeros(IrrepsLayout::new(x.l_max(), c_out));
    for (l, w) in weights.iter().enumerate() {
        out.degree_mut(l).gemm(1.0, w, &x.degree(l), 0.0);
    }
    if let Some(b) = bias {
        for (v, bi) in out.scalars_mut().iter_mut().zip(b.iter()) {
            *v += bi;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::initialize;
    use crate::so3::{wigner_d_all, Rotation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_weights_are_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = IrrepsFeature::random(IrrepsLayout::new(3, 4), &mut rng);
        let y = EquivariantLinear::identity(3, 4).forward(&x).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn scalar_layout_is_affine() {
        let mut lin = EquivariantLinear::new(0, 3, 2, true);
        lin.weights[0] = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -1.0, 0.0, 0.5]);
        lin.bias = Some(DVector::from_vec(vec![0.25, -4.0]));
        let x = IrrepsFeature::from_scalars(&[1.0, -1.0, 2.0]);
        let y = lin.forward(&x).unwrap();
        assert_eq!(y.as_slice(), &[1.0 - 2.0 + 6.0 + 0.25, -1.0 + 1.0 - 4.0]);
    }

    #[test]
    fn commutes_with_rotation() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut lin = EquivariantLinear::new(4, 5, 3, true);
        initialize(&mut lin, &mut rng);
        lin.bias.as_mut().unwrap().fill(0.3);
        for _ in 0..5 {
            let x = IrrepsFeature::random(IrrepsLayout::new(4, 5), &mut rng);
            let d = wigner_d_all(&Rotation::random(&mut rng), 4).unwrap();
            let a = lin.forward(&x.rotate(&d)).unwrap();
            let b = lin.forward(&x).unwrap().rotate(&d);
            assert!(a.max_abs_diff(&b) < 1e-12);
        }
    }

    #[test]
    fn rejects_mismatched_weights() {
        let x = IrrepsFeature::zeros(IrrepsLayout::new(2, 3));
        let lin = EquivariantLinear::new(2, 4, 3, false);
        assert!(lin.forward(&x).is_err());
        let lin = EquivariantLinear::new(1, 3, 3, false);
        assert!(lin.forward(&x).is_err());
    }
}
