//! Irreps features and the reference SO(3) operations on them.

mod feature;
mod linear;
mod tensor_product;

pub use feature::{IrrepsFeature, IrrepsLayout};
pub use linear::{equivariant_linear, EquivariantLinear};
pub(crate) use tensor_product::unit_direction;
pub use tensor_product::{
    depthwise_tensor_product, depthwise_tensor_product_with, so3_convolution,
    so3_convolution_with, valid_paths, CgLookup, DepthwiseWeights, Path, PathWeights,
};
