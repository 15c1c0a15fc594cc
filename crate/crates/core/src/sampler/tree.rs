use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{NodeId, SymMatrix};

/// One spanning-tree sample rooted at its observer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeSample {
    pub root: NodeId,
    pub start_time: f64,
    /// `parent[v]` for every reached non-root node.
    pub parent: Vec<Option<NodeId>>,
    /// Time the node first held the message (hop depth for BFS trees).
    pub arrival: Vec<Option<f64>>,
    /// True when the tree does not reach every node.
    pub partial: bool,
}

impl TreeSample {
    pub(crate) fn from_parts(
        root: NodeId,
        start_time: f64,
        parent: Vec<Option<NodeId>>,
        arrival: Vec<Option<f64>>,
    ) -> Self {
        let partial = arrival.iter().any(|a| a.is_none());
        TreeSample {
            root,
            start_time,
            parent,
            arrival,
            partial,
        }
    }

    /// Rebuilds a tree from `(child, parent)` edges and validates it.
    pub fn from_edges(n: usize, root: NodeId, start_time: f64, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        if root.index() >= n {
            return Err(Error::invalid(format!("root {root} out of range for {n} nodes")));
        }
        let mut parent = vec![None; n];
        for &(c, p) in edges {
            if c.index() >= n || p.index() >= n {
                return Err(Error::invalid(format!("edge ({c},{p}) out of range for {n} nodes")));
            }
            if c == root {
                return Err(Error::invalid(format!("root {root} has a parent")));
            }
            if parent[c.index()].replace(p).is_some() {
                return Err(Error::invalid(format!("node {c} has two parents")));
            }
        }
        // depth by walking to the root; any cycle or dangling chain is an error
        let mut arrival = vec![None; n];
        arrival[root.index()] = Some(0.0);
        for v in 0..n {
            if parent[v].is_none() {
                continue;
            }
            let mut path = vec![v];
            let mut cur = v;
            loop {
                if arrival[cur].is_some() {
                    break;
                }
                match parent[cur] {
                    Some(p) => {
                        cur = p.index();
                        if path.len() > n {
                            return Err(Error::invalid(format!("cycle through node {v}")));
                        }
                        path.push(cur);
                    }
                    None => return Err(Error::invalid(format!("node {v} is not connected to root {root}"))),
                }
            }
            let mut depth = arrival[cur].unwrap();
            for &u in path.iter().rev().skip(1) {
                depth += 1.0;
                arrival[u] = Some(depth);
            }
        }
        Ok(Self::from_parts(root, start_time, parent, arrival))
    }

    pub fn n_nodes(&self) -> usize {
        self.parent.len()
    }

    pub fn is_reached(&self, v: NodeId) -> bool {
        self.arrival[v.index()].is_some()
    }

    pub fn reached(&self) -> Vec<NodeId> {
        (0..self.n_nodes())
            .filter(|&v| self.arrival[v].is_some())
            .map(NodeId)
            .collect()
    }

    pub fn reached_count(&self) -> usize {
        self.arrival.iter().filter(|a| a.is_some()).count()
    }

    /// `(child, parent)` pairs in child order.
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.parent
            .iter()
            .enumerate()
            .filter_map(|(c, p)| p.map(|p| (NodeId(c), p)))
            .collect()
    }

    pub fn uses_edge(&self, a: NodeId, b: NodeId) -> bool {
        self.parent[a.index()] == Some(b) || self.parent[b.index()] == Some(a)
    }

    /// 0/1 adjacency matrix of the tree edges.
    pub fn matrix(&self) -> SymMatrix {
        let mut m = SymMatrix::zeros(self.n_nodes());
        for (c, p) in self.edges() {
            m.set(c.index(), p.index(), 1.0);
        }
        m
    }
}

/// Minimal union-find used to check acyclicity.
pub(crate) struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    pub(crate) fn new(n: usize) -> Self {
        DisjointSets {
            parent: (0..n).collect(),
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// False if `a` and `b` were already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Checks that the tree's matrix is an acyclic connected graph on `reached`.
pub fn check_tree(tree: &TreeSample) -> Result<()> {
    let n = tree.n_nodes();
    let m = tree.matrix();
    let reached = tree.reached();
    if !tree.is_reached(tree.root) {
        return Err(Error::invalid("root not reached"));
    }
    if m.nnz() != 2 * (reached.len() - 1) {
        return Err(Error::invalid(format!(
            "{} nonzeros for {} reached nodes",
            m.nnz(),
            reached.len()
        )));
    }
    let mut dsu = DisjointSets::new(n);
    for i in 0..n {
        for j in 0..i {
            let w = m.get(i, j);
            if w != 0.0 {
                if w != 1.0 {
                    return Err(Error::invalid(format!("entry ({i},{j}) = {w}")));
                }
                if !tree.is_reached(NodeId(i)) || !tree.is_reached(NodeId(j)) {
                    return Err(Error::invalid(format!("edge ({i},{j}) leaves the reached set")));
                }
                if !dsu.union(i, j) {
                    return Err(Error::invalid(format!("edge ({i},{j}) closes a cycle")));
                }
            }
        }
    }
    let r = dsu.find(tree.root.index());
    if let Some(v) = reached.iter().find(|v| dsu.find(v.index()) != r) {
        return Err(Error::invalid(format!("node {v} disconnected from root")));
    }
    Ok(())
}
