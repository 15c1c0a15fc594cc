//! Static graphs, contact traces, symmetric matrices and trace I/O.

mod graph;
mod matrix;
mod temporal;
pub mod trace;

use serde::{Deserialize, Serialize};

pub use graph::StaticGraph;
pub use matrix::{DenseMatrix, SymMatrix};
pub use temporal::{aggregate_static, ContactEvent, TemporalNetwork};
pub use trace::{ingest_trace, TraceFormat};

/// Dense node index in `[0, n_nodes)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl From<usize> for NodeId {
    fn from(i: usize) -> Self {
        NodeId(i)
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}
