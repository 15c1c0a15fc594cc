//! Spanning-tree samples: BFS snowball samples on static graphs and flooding
//! trees on contact traces.

mod batch;
mod bfs;
mod flood;
pub mod io;
mod tree;

pub use batch::{
    filter_batch, filter_indices, prefer_without_edge, sample_batch, BatchSource, SampleBatch, Source, SAMPLE_STREAM,
};
pub use bfs::bfs_tree;
pub(crate) use flood::Spreader;
pub use flood::{flood_tree, flood_tree_with, FloodIndex};
pub use tree::{check_tree, TreeSample};
