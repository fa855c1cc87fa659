//! Explicit symplectic folding embeddings of polydisks into cubes and of
//! long boxes into neighborhoods of a probability measure, Aarnes
//! quasi-states on a discretized sphere, and fiber analysis of the cutoff
//! involutive maps built on top of the embeddings.

// `!(x > 0.0)` guards reject NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod audit;
pub mod cli;
pub mod error;
pub mod fibers;
pub mod folding;
pub mod geometry;
pub mod lattice;
pub mod measure;
pub mod profile;
pub mod quasistate;

pub use error::{Error, Result};
