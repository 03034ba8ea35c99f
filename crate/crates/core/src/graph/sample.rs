use nalgebra::Vector3;
use rand::Rng;

use super::structure::AtomicStructure;
use crate::error::{argument, Result};
use crate::so3::Rotation;

/// Coordinates are multiples of this (Å), so differences and dyadic
/// translations are exact.
pub const POSITION_QUANTUM: f64 = 1.0 / 64.0;

/// Random structure of `n_atoms` atoms in a cube of side `box_size` (Å), with
/// species drawn from `species` and no pair closer than `min_distance`.
pub fn random_structure<R: Rng + ?Sized>(
    rng: &mut R,
    n_atoms: usize,
    box_size: f64,
    min_distance: f64,
    species: &[u8],
) -> Result<AtomicStructure> {
    if species.is_empty() {
        return Err(argument("no species to sample from"));
    }
    let cells = (box_size / POSITION_QUANTUM).floor() as i64;
    if cells < 1 {
        return Err(argument(format!("box size {box_size} too small")));
    }
    let mut positions: Vec<Vector3<f64>> = Vec::with_capacity(n_atoms);
    let mut attempts = 0usize;
    while positions.len() < n_atoms {
        attempts += 1;
        if attempts > 10_000 * n_atoms.max(1) {
            return Err(argument(format!(
                "could not place {n_atoms} atoms {min_distance} Å apart in a {box_size} Å box"
            )));
        }
        let p = Vector3::from_fn(|_, _| rng.random_range(0..=cells) as f64 * POSITION_QUANTUM);
        if positions.iter().all(|q| (p - q).norm() >= min_distance) {
            positions.push(p);
        }
    }
    let species = (0..n_atoms)
        .map(|_| species[rng.random_range(0..species.len())])
        .collect();
    AtomicStructure::new(species, positions)
}

impl AtomicStructure {
    pub fn translated(&self, t: &Vector3<f64>) -> AtomicStructure {
        let mut s = self.clone();
        s.positions.iter_mut().for_each(|p| *p += t);
        s
    }

    /// Positions rotated about the origin.
    pub fn rotated(&self, r: &Rotation) -> AtomicStructure {
        let mut s = self.clone();
        s.positions.iter_mut().for_each(|p| *p = r.apply(p));
        s
    }

    /// Atom `i` of the result is atom `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> AtomicStructure {
        AtomicStructure {
            species: order.iter().map(|&i| self.species[i]).collect(),
            positions: order.iter().map(|&i| self.positions[i]).collect(),
            comment: self.comment.clone(),
        }
    }
}
