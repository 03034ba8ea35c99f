pub mod audit;
pub mod bench;
pub mod error;
pub mod escn;
pub mod graph;
pub mod irreps;
pub mod layers;
pub mod model;
pub mod nn;
pub mod relax;
pub mod so3;

pub use error::{Error, Result};
