//! Spanning-tree sampling and joint diagonalisation for temporal contact
//! networks.
//!
//! The pipeline floods messages through a contact trace (or runs BFS on a
//! static graph) to collect spanning-tree samples, finds the orthogonal basis
//! that jointly diagonalises their adjacency matrices as well as possible, and
//! uses each sample's residual off-diagonal energy (its *deviation*) to split
//! the trace into time-localised modes. Each mode gets its own average graph,
//! Fiedler clustering and shortest-path presentation graph; an SIR simulator
//! checks which seed nodes spread fastest.

// `!(x > 0.0)` guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cluster;
pub mod epidemic;
pub mod error;
pub mod jointdiag;
pub mod modes;
pub mod netcore;
pub mod pipeline;
pub mod rng;
pub mod sampler;
pub mod synthgen;

pub use error::{Error, Result};
pub use netcore::{ContactEvent, DenseMatrix, NodeId, StaticGraph, SymMatrix, TemporalNetwork};
