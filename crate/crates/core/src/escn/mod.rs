//! eSCN convolutions: edge alignment followed by SO(2) linear maps.

mod convolution;
mod so2;

pub use convolution::{escn_convolution, escn_convolution_in_frame};
pub use so2::{reparametrize_weights, so2_linear, so2_linear_split, So2Block, So2LinearWeights};
