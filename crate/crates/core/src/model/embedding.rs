use nalgebra::DMatrix;
use rayon::prelude::*;

use super::radial::EdgeContext;
use crate::error::{argument, Result};
use crate::escn::{so2_linear, So2LinearWeights};
use crate::irreps::{IrrepsFeature, IrrepsLayout};
use crate::nn::{join, visit_matrix, Linear, ParamRole, ParamVisitor, Params};

/// Lookup table from atomic number to degree-0 channels.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomEmbedding {
    /// `channels × n_species`; column `z - 1` embeds atomic number `z`.
    pub table: DMatrix<f64>,
    l_max: usize,
}

impl AtomEmbedding {
    pub fn new(l_max: usize, channels: usize, n_species: usize) -> AtomEmbedding {
        AtomEmbedding {
            table: DMatrix::zeros(channels, n_species),
            l_max,
        }
    }

    /// Feature with the embedding in degree 0 and zeros elsewhere.
    pub fn embed(&self, species: u8) -> Result<IrrepsFeature> {
        let z = species as usize;
        if z == 0 || z > self.table.ncols() {
            return Err(argument(format!(
                "atomic number {species} outside the {} embedded species",
                self.table.ncols()
            )));
        }
        let mut x = IrrepsFeature::zeros(IrrepsLayout::new(self.l_max, self.table.nrows()));
        x.scalars_mut().copy_from_slice(self.table.column(z - 1).as_slice());
        Ok(x)
    }
}

impl Params for AtomEmbedding {
    fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor<'_>) {
        visit_matrix(prefix, "table", ParamRole::Embedding, &mut self.table, f);
    }
}

/// Edge-degree embedding: the source atom's scalars are lifted to the `m = 0`
/// components of every degree by an SO(2) linear layer in the edge frame,
/// scaled by radial multipliers, rotated back and summed over incoming edges.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDegreeEmbedding {
    pub so2: So2LinearWeights,
    /// Edge embedding → per-(degree, channel) multipliers.
    pub radial: Linear,
}

impl EdgeDegreeEmbedding {
    pub fn new(l_max: usize, channels: usize, d_edge: usize) -> EdgeDegreeEmbedding {
        EdgeDegreeEmbedding {
            so2: So2LinearWeights::zeros(0, l_max, 0, channels, channels),
            radial: Linear::new(d_edge, (l_max + 1) * channels, true),
        }
    }

    /// Contribution of one edge, given the source atom's degree-0 channels.
    pub fn edge_message(&self, source_scalars: &[f64], edge: &EdgeContext) -> Result<IrrepsFeature> {
        let mut y = so2_linear(&IrrepsFeature::from_scalars(source_scalars), &self.so2)?;
        y.scale_per_degree_channel(&self.radial.forward(&edge.embedding)?);
        Ok(y.rotate_inverse(&edge.wigner))
    }

    /// Summed embedding per node; isolated nodes receive zeros.
    pub fn forward(&self, atom_scalars: &[Vec<f64>], edges: &[EdgeContext]) -> Result<Vec<IrrepsFeature>> {
        let messages = edges
            .par_iter()
            .map(|e| self.edge_message(&atom_scalars[e.source], e))
            .collect::<Result<Vec<_>>>()?;
        let layout = IrrepsLayout::new(self.so2.l_out_max(), self.so2.c_out());
        let mut out = vec![IrrepsFeature::zeros(layout); atom_scalars.len()];
        for (e, m) in edges.iter().zip(&messages) {
            out[e.target].add_assign(m);
        }
        Ok(out)
    }
}

impl Params for EdgeDegreeEmbedding {
    fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor<'_>) {
        self.so2.visit_params(&join(prefix, "so2"), f);
        self.radial.visit_params(&join(prefix, "radial"), f);
    }
}
