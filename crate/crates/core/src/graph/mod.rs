//! Atomic structures, XYZ input and neighbour graphs.

mod build;
mod sample;
mod structure;

pub use build::{build_graph, AtomGraph, Edge};
pub use sample::{random_structure, POSITION_QUANTUM};
pub use structure::{atomic_number, element_symbol, parse_xyz, AtomicStructure, MAX_ATOMIC_NUMBER};
