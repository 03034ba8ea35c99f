use nalgebra::Vector3;

use super::so2::{so2_linear, So2LinearWeights};
use crate::error::Result;
use crate::irreps::{unit_direction, IrrepsFeature};
use crate::so3::{alignment_rotation, wigner_d_all, Rotation};

/// eSCN convolution: rotate `x` into the frame where the edge points along
/// `ŷ`, apply the SO(2) linear map, rotate back.
///
/// ```text
/// m = D(R)⁻¹ · so2_linear(D(R) · x),   R r̂ = ŷ
/// ```
pub fn escn_convolution(
    x_source: &IrrepsFeature,
    relative_vector: &Vector3<f64>,
    weights: &So2LinearWeights,
) -> Result<IrrepsFeature> {
    let dir = unit_direction(relative_vector)?;
    let frame = alignment_rotation(&dir)?;
    escn_convolution_in_frame(x_source, &frame, weights)
}

/// [`escn_convolution`] in a caller-chosen frame. Any `frame` with
/// `frame · r̂ = ŷ` gives the same message; frames differ only by a rotation
/// about `ŷ`, which the SO(2) map commutes with.
pub fn escn_convolution_in_frame(
    x_source: &IrrepsFeature,
    frame: &Rotation,
    weights: &So2LinearWeights,
) -> Result<IrrepsFeature> {
    let l = x_source.l_max().max(weights.l_out_max());
    let d = wigner_d_all(frame, l)?;
    let aligned = x_source.rotate(&d);
    Ok(so2_linear(&aligned, weights)?.rotate_inverse(&d))
}
