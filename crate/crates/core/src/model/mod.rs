//! The equivariant transformer: configuration, embeddings, attention, feed
//! forward, blocks, heads and checkpoints.

mod attention;
mod checkpoint;
mod config;
mod embedding;
mod ffn;
mod network;
mod radial;

pub use attention::{AttentionShape, AttentionState, GraphAttention, LEAKY_SLOPE};
pub use checkpoint::{
    load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Manifest, TensorEntry,
    LAYOUT_VERSION, MAGIC,
};
pub use config::ModelConfig;
pub use embedding::{AtomEmbedding, EdgeDegreeEmbedding};
pub use ffn::FeedForward;
pub use network::{Model, Prediction, TransformerBlock};
pub use radial::{
    gaussian_radial_basis, prepare_edges, radial_function, EdgeContext, EdgeEncoder,
    GaussianRadialBasis, RadialFunction,
};
