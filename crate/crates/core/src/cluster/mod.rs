//! Fiedler-vector communities and presentation graphs for average graphs.

mod export;
mod fiedler;
mod paths;

pub use export::{node_sizes, save_dot, write_dot, write_edges_csv, write_nodes_csv};
pub use fiedler::{fiedler_dendrogram, fiedler_vector, laplacian, Dendrogram, Fiedler};
pub use paths::{clamp_weights, shortest_path_graph, threshold_graph, DistanceTransform};
