use serde::{Deserialize, Serialize};

use super::matrix::SymMatrix;
use super::NodeId;
use crate::error::{Error, Result};

/// Weighted undirected graph with zero diagonal and nonnegative weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticGraph {
    adjacency: SymMatrix,
}

impl StaticGraph {
    pub fn empty(n: usize) -> Self {
        StaticGraph {
            adjacency: SymMatrix::zeros(n),
        }
    }

    pub fn from_adjacency(adjacency: SymMatrix) -> Result<Self> {
        let n = adjacency.n();
        for i in 0..n {
            if adjacency.get(i, i) != 0.0 {
                return Err(Error::invalid(format!("nonzero diagonal at node {i}")));
            }
            for j in 0..i {
                let w = adjacency.get(i, j);
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(Error::invalid(format!("bad weight {w} on edge ({i},{j})")));
                }
            }
        }
        Ok(StaticGraph { adjacency })
    }

    /// Unit-weight graph from an edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let weighted: Vec<_> = edges.iter().map(|&(a, b)| (a, b, 1.0)).collect();
        Self::from_weighted_edges(n, &weighted)
    }

    pub fn from_weighted_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adj = SymMatrix::zeros(n);
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::invalid(format!("edge ({a},{b}) out of range for {n} nodes")));
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop at node {a}")));
            }
            adj.set(a, b, w);
        }
        Self::from_adjacency(adj)
    }

    pub fn n_nodes(&self) -> usize {
        self.adjacency.n()
    }

    pub fn adjacency(&self) -> &SymMatrix {
        &self.adjacency
    }

    pub fn weight(&self, a: NodeId, b: NodeId) -> f64 {
        self.adjacency.get(a.index(), b.index())
    }

    /// Edges `(i, j, w)` with `i < j` and `w > 0`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n_nodes();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                let w = self.adjacency.get(i, j);
                if w > 0.0 {
                    out.push((i, j, w));
                }
            }
        }
        out
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// Sorted neighbour lists.
    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let n = self.n_nodes();
        (0..n)
            .map(|i| (0..n).filter(|&j| self.adjacency.get(i, j) > 0.0).collect())
            .collect()
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.n_nodes()).filter(|&j| self.adjacency.get(i, j) > 0.0).count()
    }

    /// Sum of incident weights per node.
    pub fn strength(&self) -> Vec<f64> {
        let n = self.n_nodes();
        (0..n).map(|i| (0..n).map(|j| self.adjacency.get(i, j)).sum()).collect()
    }

    /// Component index per node; components are numbered by smallest member.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n_nodes();
        let nbrs = self.neighbours();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &v in &nbrs[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        self.n_nodes() <= 1 || self.components().iter().all(|&c| c == 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_weights_and_loops() {
        assert!(StaticGraph::from_weighted_edges(3, &[(0, 1, -1.0)]).is_err());
        assert!(StaticGraph::from_edges(3, &[(1, 1)]).is_err());
        assert!(StaticGraph::from_edges(3, &[(0, 3)]).is_err());
    }

    #[test]
    fn components_and_connectivity() {
        let g = StaticGraph::from_edges(5, &[(0, 1), (3, 4)]).unwrap();
        assert_eq!(g.components(), vec![0, 0, 1, 2, 2]);
        assert!(!g.is_connected());
        let g = StaticGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(g.is_connected());
        assert_eq!(g.neighbours()[1], vec![0, 2]);
    }
}
