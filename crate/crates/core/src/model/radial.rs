use nalgebra::{DMatrix, Vector3};
use rayon::prelude::*;

use crate::error::{argument, shape, Result};
use crate::graph::AtomGraph;
use crate::nn::{join, silu, visit_matrix, LayerNorm, Linear, ParamRole, ParamVisitor, Params};
use crate::so3::{alignment_rotation, wigner_d_all, Rotation, WignerBlock};

/// Unnormalised Gaussians with centres `k·cutoff/(n-1)` and width equal to the
/// centre spacing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianRadialBasis {
    n: usize,
    cutoff: f64,
}

impl GaussianRadialBasis {
    pub fn new(n: usize, cutoff: f64) -> Result<GaussianRadialBasis> {
        if n < 2 {
            return Err(argument("a radial basis needs at least two functions"));
        }
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(argument(format!("cutoff must be positive, got {cutoff}")));
        }
        Ok(GaussianRadialBasis { n, cutoff })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.cutoff / (self.n - 1) as f64
    }

    pub fn center(&self, k: usize) -> f64 {
        k as f64 * self.spacing()
    }

    pub fn evaluate(&self, distance: f64) -> Result<Vec<f64>> {
        if !(distance > 0.0 && distance <= self.cutoff) {
            return Err(argument(format!(
                "distance {distance} outside (0, {}]",
                self.cutoff
            )));
        }
        let s = self.spacing();
        Ok((0..self.n)
            .map(|k| {
                let t = (distance - self.center(k)) / s;
                (-0.5 * t * t).exp()
            })
            .collect())
    }
}

/// `gaussian_radial_basis(distance, n_bases, cutoff)`.
pub fn gaussian_radial_basis(distance: f64, n_bases: usize, cutoff: f64) -> Result<Vec<f64>> {
    GaussianRadialBasis::new(n_bases, cutoff)?.evaluate(distance)
}

/// Scalar MLP: `Linear → LN → SiLU → Linear → LN → SiLU → Linear`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    pub hidden1: Linear,
    pub norm1: LayerNorm,
    pub hidden2: Linear,
    pub norm2: LayerNorm,
    pub output: Linear,
}

impl RadialFunction {
    pub fn new(d_in: usize, d_hidden: usize, d_out: usize) -> RadialFunction {
        RadialFunction {
            hidden1: Linear::new(d_in, d_hidden, true),
            norm1: LayerNorm::new(d_hidden),
            hidden2: Linear::new(d_hidden, d_hidden, true),
            norm2: LayerNorm::new(d_hidden),
            output: Linear::new(d_hidden, d_out, true),
        }
    }

    pub fn d_in(&self) -> usize {
        self.hidden1.d_in()
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        let mut h = self.norm1.forward(&self.hidden1.forward(input)?)?;
        h.iter_mut().for_each(|v| *v = silu(*v));
        let mut h = self.norm2.forward(&self.hidden2.forward(&h)?)?;
        h.iter_mut().for_each(|v| *v = silu(*v));
        self.output.forward(&h)
    }
}

impl Params for RadialFunction {
    fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor<'_>) {
        self.hidden1.visit_params(&join(prefix, "hidden1"), f);
        self.norm1.visit_params(&join(prefix, "norm1"), f);
        self.hidden2.visit_params(&join(prefix, "hidden2"), f);
        self.norm2.visit_params(&join(prefix, "norm2"), f);
        self.output.visit_params(&join(prefix, "output"), f);
    }
}

/// Edge distance embedding from the radial basis and the embeddings of the
/// source and target species, concatenated in that order.
pub fn radial_function(
    basis: &[f64],
    source_embedding: &[f64],
    target_embedding: &[f64],
    function: &RadialFunction,
) -> Result<Vec<f64>> {
    let n = basis.len() + source_embedding.len() + target_embedding.len();
    if n != function.d_in() {
        return Err(shape(format!(
            "radial function expects {} inputs, got {n}",
            function.d_in()
        )));
    }
    let mut input = Vec::with_capacity(n);
    input.extend_from_slice(basis);
    input.extend_from_slice(source_embedding);
    input.extend_from_slice(target_embedding);
    function.forward(&input)
}

/// Species embeddings plus the radial function producing `d_edge` scalars per
/// edge.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeEncoder {
    pub basis: GaussianRadialBasis,
    /// `d_edge × n_species`; column `z - 1` embeds atomic number `z`.
    pub source_embedding: DMatrix<f64>,
    pub target_embedding: DMatrix<f64>,
    pub radial: RadialFunction,
}

impl EdgeEncoder {
    pub fn new(n_bases: usize, cutoff: f64, d_edge: usize, n_species: usize) -> Result<EdgeEncoder> {
        Ok(EdgeEncoder {
            basis: GaussianRadialBasis::new(n_bases, cutoff)?,
            source_embedding: DMatrix::zeros(d_edge, n_species),
            target_embedding: DMatrix::zeros(d_edge, n_species),
            radial: RadialFunction::new(n_bases + 2 * d_edge, d_edge, d_edge),
        })
    }

    fn species_column(table: &DMatrix<f64>, z: u8) -> Result<&[f64]> {
        let idx = z as usize;
        if idx == 0 || idx > table.ncols() {
            return Err(argument(format!(
                "atomic number {z} outside the {} embedded species",
                table.ncols()
            )));
        }
        let d = table.nrows();
        Ok(&table.as_slice()[(idx - 1) * d..idx * d])
    }

    pub fn encode(&self, distance: f64, source_species: u8, target_species: u8) -> Result<Vec<f64>> {
        let basis = self.basis.evaluate(distance)?;
        radial_function(
            &basis,
            EdgeEncoder::species_column(&self.source_embedding, source_species)?,
            EdgeEncoder::species_column(&self.target_embedding, target_species)?,
            &self.radial,
        )
    }
}

impl Params for EdgeEncoder {
    fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor<'_>) {
        visit_matrix(prefix, "source_embedding", ParamRole::Embedding, &mut self.source_embedding, f);
        visit_matrix(prefix, "target_embedding", ParamRole::Embedding, &mut self.target_embedding, f);
        self.radial.visit_params(&join(prefix, "radial"), f);
    }
}

/// Everything a layer needs to know about one directed edge.
#[derive(Debug, Clone)]
pub struct EdgeContext {
    pub source: usize,
    pub target: usize,
    /// `pos[source] - pos[target]`, Å.
    pub vector: Vector3<f64>,
    pub distance: f64,
    /// Maps the edge direction to `ŷ`.
    pub rotation: Rotation,
    /// Wigner blocks of `rotation` for degrees `0..=L_max`.
    pub wigner: Vec<WignerBlock>,
    /// Edge distance embedding.
    pub embedding: Vec<f64>,
}

/// Build the per-edge contexts of `graph`; edges keep the graph's order.
pub fn prepare_edges(graph: &AtomGraph, l_max: usize, encoder: &EdgeEncoder) -> Result<Vec<EdgeContext>> {
    graph
        .edges
        .par_iter()
        .map(|e| {
            let rotation = alignment_rotation(&(e.vector / e.distance))?;
            Ok(EdgeContext {
                source: e.source,
                target: e.target,
                vector: e.vector,
                distance: e.distance,
                rotation,
                wigner: wigner_d_all(&rotation, l_max)?,
                embedding: encoder.encode(e.distance, graph.species[e.source], graph.species[e.target])?,
            })
        })
        .collect()
}
