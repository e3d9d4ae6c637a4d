//! Quad-dominant mesh tokenization, ray-cast mesh rewards, ranking-preference
//! losses and an asynchronous versioned rollout/trainer harness.

pub mod adjacency;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod mesh;
pub mod metrics;
pub mod procedural;
pub mod rewards;
pub mod rl;
pub mod tokenizer;
pub mod tokfile;

pub use adjacency::{build_edge_adjacency, Edge, EdgeAdjacency};
pub use mesh::{
    canonicalize, normalize_mesh, quantize_vertices, quantize_with_bounds, Face, Mesh, MeshError, Point3, QuantBounds,
    QuantizedMesh,
};
pub use tokenizer::{detokenize, serialize_face, tokenize, validate_tokens, Strictness, TokenError, TokenSequence};
