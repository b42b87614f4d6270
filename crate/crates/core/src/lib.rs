//! Citation recommendation from fused text and citation-graph embeddings.

pub mod config;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod evaluation;
pub mod fusion;
pub mod graph;
pub mod inference;
pub mod pipeline;
pub mod retrieval;
pub mod text;

pub use error::{Error, Result};
