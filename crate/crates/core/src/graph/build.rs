use nalgebra::Vector3;

use super::structure::AtomicStructure;
use crate::error::{argument, Error, Result};

/// Directed edge `source → target` carrying `r = pos[source] - pos[target]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub vector: Vector3<f64>,
    pub distance: f64,
}

/// Atoms plus the directed neighbour edges used for message passing.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomGraph {
    pub species: Vec<u8>,
    pub positions: Vec<Vector3<f64>>,
    /// Sorted by target, then source.
    pub edges: Vec<Edge>,
    pub cutoff: f64,
    pub max_neighbors: usize,
}

impl AtomGraph {
    pub fn n_atoms(&self) -> usize {
        self.species.len()
    }

    /// Range of `edges` whose target is `node`.
    pub fn incoming(&self, node: usize) -> std::ops::Range<usize> {
        let start = self.edges.partition_point(|e| e.target < node);
        let end = self.edges.partition_point(|e| e.target <= node);
        start..end
    }
}

/// Build directed edges `j → i` for every `j` within `cutoff` of `i`, keeping
/// the `max_neighbors` nearest sources of each target (ties go to the lower
/// source index). Brute force over all pairs.
pub fn build_graph(structure: &AtomicStructure, cutoff: f64, max_neighbors: usize) -> Result<AtomGraph> {
    if !(cutoff > 0.0 && cutoff.is_finite()) {
        return Err(argument(format!("cutoff must be positive and finite, got {cutoff}")));
    }
    if max_neighbors == 0 {
        return Err(argument("max_neighbors must be at least 1"));
    }
    structure.validate()?;
    let pos = &structure.positions;
    let mut edges = Vec::new();
    let mut candidates: Vec<Edge> = Vec::new();
    for target in 0..pos.len() {
        candidates.clear();
        for source in 0..pos.len() {
            if source == target {
                continue;
            }
            let vector = pos[source] - pos[target];
            let distance = vector.norm();
            if distance == 0.0 {
                return Err(Error::DegenerateEdge(format!(
                    "atoms {source} and {target} share a position"
                )));
            }
            if distance <= cutoff {
                candidates.push(Edge {
                    source,
                    target,
                    vector,
                    distance,
                });
            }
        }
        candidates.sort_by(|a, b| a.distance.total_cmp(&b.distance).then(a.source.cmp(&b.source)));
        candidates.truncate(max_neighbors);
        candidates.sort_by_key(|e| e.source);
        edges.extend_from_slice(&candidates);
    }
    Ok(AtomGraph {
        species: structure.species.clone(),
        positions: structure.positions.clone(),
        edges,
        cutoff,
        max_neighbors,
    })
}
