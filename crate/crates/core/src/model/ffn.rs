use nalgebra::DMatrix;

use crate::error::Result;
use crate::irreps::{EquivariantLinear, IrrepsFeature};
use crate::layers::{separable_s2_activation_map, S2Grid};
use crate::nn::{join, silu, visit_matrix, ParamRole, ParamVisitor, Params};

/// Point-wise feed-forward network:
/// `EquivariantLinear → separable S² (grid MLP) → EquivariantLinear`.
///
/// The SiLU branch of the activation comes from a separate scalar projection
/// of the input's degree-0 channels. On the grid every point's channel vector
/// goes through `W₃ · SiLU(W₂ · SiLU(W₁ · s))`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedForward {
    /// Degree-0 projection feeding the SiLU branch (`d_ffn × c_in`).
    pub gate: EquivariantLinear,
    pub first: EquivariantLinear,
    pub grid_mlp: [DMatrix<f64>; 3],
    pub second: EquivariantLinear,
}

impl FeedForward {
    pub fn new(l_max: usize, c_in: usize, d_ffn: usize, c_out: usize) -> FeedForward {
        FeedForward {
            gate: EquivariantLinear::new(0, c_in, d_ffn, true),
            first: EquivariantLinear::new(l_max, c_in, d_ffn, true),
            grid_mlp: [
                DMatrix::zeros(d_ffn, d_ffn),
                DMatrix::zeros(d_ffn, d_ffn),
                DMatrix::zeros(d_ffn, d_ffn),
            ],
            second: EquivariantLinear::new(l_max, d_ffn, c_out, true),
        }
    }

    pub fn forward(&self, x: &IrrepsFeature, grid: &S2Grid) -> Result<IrrepsFeature> {
        let scalars = self.gate.forward(&x.resized(0))?;
        let hidden = self.first.forward(x)?;
        let activated = separable_s2_activation_map(scalars.as_slice(), &hidden, grid, |s| {
            let mut h = &self.grid_mlp[0] * s;
            h.apply(|v| *v = silu(*v));
            let mut h = &self.grid_mlp[1] * h;
            h.apply(|v| *v = silu(*v));
            Ok(&self.grid_mlp[2] * h)
        })?;
        self.second.forward(&activated)
    }
}

impl Params for FeedForward {
    fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor<'_>) {
        self.gate.visit_params(&join(prefix, "gate"), f);
        self.first.visit_params(&join(prefix, "first"), f);
        for (k, w) in self.grid_mlp.iter_mut().enumerate() {
            let fan_in = w.ncols();
            visit_matrix(prefix, &format!("grid_mlp{k}"), ParamRole::Weight { fan_in }, w, f);
        }
        self.second.visit_params(&join(prefix, "second"), f);
    }
}
