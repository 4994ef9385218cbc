//! Chimera hardware graphs, the logical layout on top of them, chain
//! embeddings and non-planarity certificates.

mod chimera;
mod embed;
mod encoding;
mod graph;
mod planarity;

pub use chimera::{build_chimera, HardwareGraph, Site};
pub use embed::{embed_chain, is_valid_embedding};
pub use encoding::{build_encoding, Block, EncodedGraph, LogicalEdge, LogicalEncoding, LogicalQubit};
pub use graph::SimpleGraph;
pub use planarity::{contains_k33_subdivision, validate_k33, K33Certificate, EXHAUSTIVE_LIMIT};
