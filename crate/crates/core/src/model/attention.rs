use nalgebra::DMatrix;
use rayon::prelude::*;

use super::radial::EdgeContext;
use crate::error::{shape, Result};
use crate::escn::{so2_linear, so2_linear_split, So2LinearWeights};
use crate::irreps::{EquivariantLinear, IrrepsFeature, IrrepsLayout};
use crate::layers::{separable_s2_activation, S2Grid};
use crate::nn::{join, leaky_relu, silu, visit_matrix, LayerNorm, Linear, ParamRole, ParamVisitor, Params};

/// Negative slope of the LeakyReLU in front of the attention logits.
pub const LEAKY_SLOPE: f64 = 0.2;

/// Sizes of one attention module.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AttentionShape {
    pub l_max: usize,
    pub m_max: usize,
    pub c_in: usize,
    pub d_edge: usize,
    pub heads: usize,
    pub d_alpha: usize,
    pub d_hidden: usize,
    pub d_value: usize,
    pub c_out: usize,
}

/// Equivariant graph attention built on eSCN convolutions.
///
/// Per edge `j → i`: `[x_i, x_j]` is rotated into the edge frame, scaled by
/// the radial multipliers and passed through the first SO(2) layer, whose
/// extra `m = 0` outputs hold the attention scalars of all heads followed by
/// the SiLU branch of the separable S² activation. Logits are
/// `a_hᵀ LeakyReLU(LN(f⁽⁰⁾_h))`, normalised by a softmax over the incoming
/// edges of `i`; values pass through the separable S² activation and the
/// second SO(2) layer. Messages `D⁻¹ (a · v)` are summed per node and the
/// concatenated heads are projected to `c_out` channels.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphAttention {
    shape: AttentionShape,
    /// Edge embedding → per-(degree, channel) multipliers of `[x_i, x_j]`.
    pub radial: Linear,
    pub so2_first: So2LinearWeights,
    /// Shared by all heads.
    pub alpha_norm: LayerNorm,
    /// `heads × d_alpha`, one logit vector per head.
    pub alpha_dot: DMatrix<f64>,
    pub so2_second: So2LinearWeights,
    pub proj: EquivariantLinear,
}

/// Intermediate attention quantities, indexed by edge.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttentionState {
    /// `LN(f⁽⁰⁾)` per head, `heads × d_alpha` values per edge (head-major).
    pub alpha_normed: Vec<Vec<f64>>,
    /// `z_ij` per head.
    pub logits: Vec<Vec<f64>>,
    /// `a_ij` per head.
    pub weights: Vec<Vec<f64>>,
}

struct EdgeTerms {
    alpha_normed: Vec<f64>,
    logits: Vec<f64>,
    value: IrrepsFeature,
}

impl GraphAttention {
    pub fn new(shape: AttentionShape) -> GraphAttention {
        let AttentionShape {
            l_max,
            m_max,
            c_in,
            d_edge,
            heads,
            d_alpha,
            d_hidden,
            d_value,
            c_out,
        } = shape;
        GraphAttention {
            shape,
            radial: Linear::new(d_edge, (l_max + 1) * 2 * c_in, true),
            so2_first: So2LinearWeights::with_extra_scalars(
                l_max,
                l_max,
                m_max,
                2 * c_in,
                d_hidden,
                heads * d_alpha + d_hidden,
            ),
            alpha_norm: LayerNorm::new(d_alpha),
            alpha_dot: DMatrix::zeros(heads, d_alpha),
            so2_second: So2LinearWeights::zeros(l_max, l_max, m_max, d_hidden, heads * d_value),
            proj: EquivariantLinear::new(l_max, heads * d_value, c_out, false),
        }
    }

    pub fn shape(&self) -> AttentionShape {
        self.shape
    }

    fn edge_terms(&self, x: &[IrrepsFeature], edge: &EdgeContext, grid: &S2Grid) -> Result<EdgeTerms> {
        let s = self.shape;
        let cat = x[edge.target].concat_channels(&x[edge.source])?;
        let mut aligned = cat.rotate(&edge.wigner);
        let mult = self.radial.forward(&edge.embedding)?;
        aligned.scale_per_degree_channel(&mult);

        let (f, extra) = so2_linear_split(&aligned, &self.so2_first)?;
        let (alpha, gate) = extra.split_at(s.heads * s.d_alpha);

        let mut alpha_normed = Vec::with_capacity(alpha.len());
        let mut logits = Vec::with_capacity(s.heads);
        for h in 0..s.heads {
            let normed = self.alpha_norm.forward(&alpha[h * s.d_alpha..(h + 1) * s.d_alpha])?;
            let z = normed
                .iter()
                .enumerate()
                .map(|(k, v)| self.alpha_dot[(h, k)] * leaky_relu(*v, LEAKY_SLOPE))
                .sum();
            logits.push(z);
            alpha_normed.extend(normed);
        }

        let activated = separable_s2_activation(gate, &f, grid, silu)?;
        let value = so2_linear(&activated, &self.so2_second)?;
        Ok(EdgeTerms {
            alpha_normed,
            logits,
            value,
        })
    }

    /// Attention output for every node. Nodes without incoming edges get zeros.
    pub fn forward(
        &self,
        x: &[IrrepsFeature],
        edges: &[EdgeContext],
        grid: &S2Grid,
    ) -> Result<Vec<IrrepsFeature>> {
        Ok(self.forward_with_state(x, edges, grid)?.0)
    }

    pub fn forward_with_state(
        &self,
        x: &[IrrepsFeature],
        edges: &[EdgeContext],
        grid: &S2Grid,
    ) -> Result<(Vec<IrrepsFeature>, AttentionState)> {
        let s = self.shape;
        let layout = IrrepsLayout::new(s.l_max, s.c_in);
        if let Some(bad) = x.iter().find(|f| f.layout() != layout) {
            return Err(shape(format!(
                "attention expects (L_max {}, C {}), got (L_max {}, C {})",
                s.l_max,
                s.c_in,
                bad.l_max(),
                bad.channels()
            )));
        }
        let terms: Vec<EdgeTerms> = edges
            .par_iter()
            .map(|e| self.edge_terms(x, e, grid))
            .collect::<Result<_>>()?;

        // softmax over the incoming edges of each target, per head
        let n = x.len();
        let mut max = vec![vec![f64::NEG_INFINITY; s.heads]; n];
        for (e, t) in edges.iter().zip(&terms) {
            for h in 0..s.heads {
                max[e.target][h] = max[e.target][h].max(t.logits[h]);
            }
        }
        let mut exps: Vec<Vec<f64>> = Vec::with_capacity(edges.len());
        let mut denom = vec![vec![0.0; s.heads]; n];
        for (e, t) in edges.iter().zip(&terms) {
            let ex: Vec<f64> = (0..s.heads)
                .map(|h| (t.logits[h] - max[e.target][h]).exp())
                .collect();
            for h in 0..s.heads {
                denom[e.target][h] += ex[h];
            }
            exps.push(ex);
        }
        let weights: Vec<Vec<f64>> = edges
            .iter()
            .zip(&exps)
            .map(|(e, ex)| (0..s.heads).map(|h| ex[h] / denom[e.target][h]).collect())
            .collect();

        let messages: Vec<IrrepsFeature> = edges
            .par_iter()
            .zip(terms.par_iter())
            .zip(weights.par_iter())
            .map(|((e, t), a)| {
                let mut v = t.value.clone();
                let c = v.channels();
                let per_channel: Vec<f64> = (0..c).map(|ch| a[ch / s.d_value]).collect();
                for k in 0..v.layout().components() {
                    for (val, w) in v.as_mut_slice()[k * c..(k + 1) * c].iter_mut().zip(&per_channel) {
                        *val *= w;
                    }
                }
                v.rotate_inverse(&e.wigner)
            })
            .collect();

        let mut summed = vec![IrrepsFeature::zeros(IrrepsLayout::new(s.l_max, s.heads * s.d_value)); n];
        for (e, m) in edges.iter().zip(&messages) {
            summed[e.target].add_assign(m);
        }
        let out = summed
            .par_iter()
            .map(|f| self.proj.forward(f))
            .collect::<Result<Vec<_>>>()?;

        let mut state = AttentionState::default();
        for t in terms {
            state.alpha_normed.push(t.alpha_normed);
            state.logits.push(t.logits);
        }
        state.weights = weights;
        Ok((out, state))
    }
}

impl Params for GraphAttention {
    fn visit_params(&mut self, prefix: &str, f: &mut ParamVisitor<'_>) {
        self.radial.visit_params(&join(prefix, "radial"), f);
        self.so2_first.visit_params(&join(prefix, "so2_first"), f);
        self.alpha_norm.visit_params(&join(prefix, "alpha_norm"), f);
        let fan_in = self.shape.d_alpha;
        visit_matrix(prefix, "alpha_dot", ParamRole::Weight { fan_in }, &mut self.alpha_dot, f);
        self.so2_second.visit_params(&join(prefix, "so2_second"), f);
        self.proj.visit_params(&join(prefix, "proj"), f);
    }
}
