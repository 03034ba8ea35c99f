//! Equivariant nonlinearities and normalisations.

mod activation;
mod grid;
mod norm;

pub use activation::{gate_activation, separable_s2_activation, separable_s2_activation_map};
pub use grid::{min_resolution, s2_activation, s2_activation_map, s2_project, s2_reconstruct, S2Grid};
pub use norm::{
    degree_rms, equivariant_layer_norm, higher_degree_rms, separable_layer_norm, NormParams,
};
