use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::attention::{AttentionShape, GraphAttention};
use super::config::ModelConfig;
use super::embedding::{AtomEmbedding, EdgeDegreeEmbedding};
use super::ffn::FeedForward;
use super::radial::{prepare_edges, EdgeContext, EdgeEncoder};
use crate::error::{Error, Result};
use crate::graph::{build_graph, AtomGraph, AtomicStructure};
use crate::irreps::IrrepsFeature;
use crate::layers::{separable_layer_norm, NormParams, S2Grid};
use crate::nn::{initialize, join, ParamVisitor, Params};

/// Pre-norm residual block: `x += attn(SLN(x))`, then `x += ffn(SLN(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformerBlock {
    pub attn_norm: NormParams,
    pub attention: GraphAttention,
    pub ffn_norm: NormParams,
    pub ffn: FeedForward,
}

impl TransformerBlock {
    pub fn new(config: &ModelConfig) -> TransformerBlock {
        let c = config.d_embed;
        TransformerBlock {
            attn_norm: NormParams::new(config.l_max, c),
            attention: GraphAttention::new(attention_shape(config, c)),
            ffn_norm: NormParams::new(config.l_max, c),
            ffn: FeedForward::new(config.l_max, c, config.d_ffn, c),
        }
    }

    pub fn forward(
        &self,
        x: &[IrrepsFeature],
        edges: &[EdgeContext],
        grid: &S2Grid,
    ) -> Result<Vec<IrrepsFeature>> {
        let normed = x
            .par_iter()
            .map(|f| separable_layer_norm(f, &self.attn_norm))
            .collect::<Result<Vec<_>>>()?;
        let attn = self.attention.forward(&normed, edges, grid)?;
        let mid: Vec<IrrepsFeature> = x
            .iter()
            .zip(&attn)
            .map(|(a, b)| {
                let mut s = a.clone();
                s.add_assign(b);
                s
            })
            .collect();
        mid.par_iter()
            .map(|f| {
                let y = self.ffn.forward(&separable_layer_norm(f, &self.ffn_norm)?, grid)?;
                let mut s = f.clone();
                s.add_assign(&y);
                Ok(s)
            })
            .collect()
    }
}

impl Params for TransformerBlock {
    fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor<'_>) {
        self.attn_norm.visit_params(&join(prefix, "attn_norm"), f);
        self.attention.visit_params(&join(prefix, "attention"), f);
        self.ffn_norm.visit_params(&join(prefix, "ffn_norm"), f);
        self.ffn.visit_params(&join(prefix, "ffn"), f);
    }
}

fn attention_shape(config: &ModelConfig, c_out: usize) -> AttentionShape {
    AttentionShape {
        l_max: config.l_max,
        m_max: config.m_max,
        c_in: config.d_embed,
        d_edge: config.d_edge,
        heads: config.n_heads,
        d_alpha: config.d_attn_alpha,
        d_hidden: config.d_attn_hidden,
        d_value: config.d_attn_value,
        c_out,
    }
}

/// Energy (eV) and per-atom forces (eV/Å).
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub energy: f64,
    pub forces: Vec<Vector3<f64>>,
}

impl Prediction {
    /// Largest per-atom force norm.
    pub fn max_force(&self) -> f64 {
        self.forces.iter().fold(0.0, |m, f| m.max(f.norm()))
    }
}

/// The full network: embeddings, transformer blocks, final norm, energy and
/// force heads.
#[derive(Debug, Clone)]
pub struct Model {
    config: ModelConfig,
    grid: S2Grid,
    pub atom_embedding: AtomEmbedding,
    pub edge_encoder: EdgeEncoder,
    pub edge_degree: EdgeDegreeEmbedding,
    pub blocks: Vec<TransformerBlock>,
    pub final_norm: NormParams,
    /// FFN to one scalar channel per node.
    pub energy_head: FeedForward,
    /// Attention to one channel; its degree-1 part is the force.
    pub force_head: GraphAttention,
}

impl Model {
    /// Model with zero weights and unit norm scales.
    pub fn new(config: &ModelConfig) -> Result<Model> {
        config.validate()?;
        let c = config.d_embed;
        Ok(Model {
            config: config.clone(),
            grid: S2Grid::square(config.l_max, config.grid_resolution)?,
            atom_embedding: AtomEmbedding::new(config.l_max, c, config.n_species),
            edge_encoder: EdgeEncoder::new(
                config.n_radial_bases,
                config.cutoff,
                config.d_edge,
                config.n_species,
            )?,
            edge_degree: EdgeDegreeEmbedding::new(config.l_max, c, config.d_edge),
            blocks: (0..config.n_blocks).map(|_| TransformerBlock::new(config)).collect(),
            final_norm: NormParams::new(config.l_max, c),
            energy_head: FeedForward::new(config.l_max, c, config.d_ffn, 1),
            force_head: GraphAttention::new(attention_shape(config, 1)),
        })
    }

    /// Randomly initialised model; the same seed always gives the same weights.
    pub fn random(config: &ModelConfig, seed: u64) -> Result<Model> {
        let mut model = Model::new(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        initialize(&mut model, &mut rng);
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn grid(&self) -> &S2Grid {
        &self.grid
    }

    /// Neighbour graph with the configured cutoff and cap.
    pub fn graph(&self, structure: &AtomicStructure) -> Result<AtomGraph> {
        build_graph(structure, self.config.cutoff, self.config.max_neighbors)
    }

    pub fn edges(&self, graph: &AtomGraph) -> Result<Vec<EdgeContext>> {
        prepare_edges(graph, self.config.l_max, &self.edge_encoder)
    }

    /// Atom embedding plus edge-degree embedding for every node.
    pub fn embed(&self, graph: &AtomGraph, edges: &[EdgeContext]) -> Result<Vec<IrrepsFeature>> {
        let mut nodes = graph
            .species
            .iter()
            .map(|z| self.atom_embedding.embed(*z))
            .collect::<Result<Vec<_>>>()?;
        let scalars: Vec<Vec<f64>> = nodes.iter().map(|x| x.scalars().to_vec()).collect();
        let degree = self.edge_degree.forward(&scalars, edges)?;
        for (x, d) in nodes.iter_mut().zip(&degree) {
            x.add_assign(d);
        }
        Ok(nodes)
    }

    /// Node features after the embedding and the first `n_blocks` blocks.
    pub fn node_features(
        &self,
        graph: &AtomGraph,
        edges: &[EdgeContext],
        n_blocks: usize,
    ) -> Result<Vec<IrrepsFeature>> {
        let mut x = self.embed(graph, edges)?;
        for block in self.blocks.iter().take(n_blocks) {
            x = block.forward(&x, edges, &self.grid)?;
        }
        Ok(x)
    }

    /// Sum over nodes of the energy head's scalar output.
    pub fn energy_head(&self, nodes: &[IrrepsFeature]) -> Result<f64> {
        let per_node = nodes
            .par_iter()
            .map(|x| Ok(self.energy_head.forward(x, &self.grid)?.scalars()[0]))
            .collect::<Result<Vec<f64>>>()?;
        Ok(per_node.iter().sum())
    }

    /// Degree-1 output of the force attention read as Cartesian vectors.
    pub fn force_head(&self, nodes: &[IrrepsFeature], edges: &[EdgeContext]) -> Result<Vec<Vector3<f64>>> {
        let out = self.force_head.forward(nodes, edges, &self.grid)?;
        Ok(out
            .iter()
            .map(|f| Vector3::new(f.get(1, -1, 0), f.get(1, 0, 0), f.get(1, 1, 0)))
            .collect())
    }

    pub fn forward(&self, graph: &AtomGraph) -> Result<Prediction> {
        let edges = self.edges(graph)?;
        let x = self.node_features(graph, &edges, self.blocks.len())?;
        let x = x
            .par_iter()
            .map(|f| separable_layer_norm(f, &self.final_norm))
            .collect::<Result<Vec<_>>>()?;
        let energy = self.energy_head(&x)?;
        let forces = self.force_head(&x, &edges)?;
        if !energy.is_finite() || forces.iter().any(|f| !f.iter().all(|v| v.is_finite())) {
            return Err(Error::NonFinite("model output".into()));
        }
        Ok(Prediction { energy, forces })
    }

    pub fn predict(&self, structure: &AtomicStructure) -> Result<Prediction> {
        self.forward(&self.graph(structure)?)
    }
}

impl Params for Model {
    fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor<'_>) {
        self.atom_embedding.visit_params(&join(prefix, "atom_embedding"), f);
        self.edge_encoder.visit_params(&join(prefix, "edge_encoder"), f);
        self.edge_degree.visit_params(&join(prefix, "edge_degree"), f);
        for (i, b) in self.blocks.iter_mut().enumerate() {
            b.visit_params(&join(prefix, &format!("blocks.{i}")), f);
        }
        self.final_norm.visit_params(&join(prefix, "final_norm"), f);
        self.energy_head.visit_params(&join(prefix, "energy_head"), f);
        self.force_head.visit_params(&join(prefix, "force_head"), f);
    }
}
