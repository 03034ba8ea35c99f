//! Exact SO(3) representation machinery: rotations, real spherical harmonics,
//! Wigner-D blocks and Clebsch-Gordan coefficients.

mod clebsch_gordan;
mod harmonics;
mod rotation;
mod wigner;

pub use clebsch_gordan::{clebsch_gordan, triangle, CgTensor, MAX_CG_DEGREE};
pub use harmonics::{spherical_harmonics, SphericalSample};
pub(crate) use harmonics::fill_harmonics;
pub use rotation::{alignment_rotation, normalize, Rotation, ROTATION_TOLERANCE, UNIT_TOLERANCE};
pub use wigner::{wigner_d, wigner_d_all, WignerBlock};
