use std::collections::VecDeque;

use rand::Rng;

use super::TreeSample;
use crate::error::{Error, Result};
use crate::netcore::{NodeId, StaticGraph};

/// Hop-count BFS tree from `root`. Every node picks its parent uniformly at
/// random among its neighbours one hop closer to the root; nodes are visited
/// in index order so the rng draws are deterministic.
pub fn bfs_tree<R: Rng + ?Sized>(g: &StaticGraph, root: NodeId, rng: &mut R) -> Result<TreeSample> {
    let nbrs = g.neighbours();
    bfs_tree_with(&nbrs, root, rng)
}

pub(crate) fn bfs_tree_with<R: Rng + ?Sized>(nbrs: &[Vec<usize>], root: NodeId, rng: &mut R) -> Result<TreeSample> {
    let n = nbrs.len();
    if root.index() >= n {
        return Err(Error::invalid(format!("root {root} out of range for {n} nodes")));
    }
    let mut dist = vec![usize::MAX; n];
    dist[root.index()] = 0;
    let mut queue = VecDeque::from([root.index()]);
    while let Some(u) = queue.pop_front() {
        for &v in &nbrs[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    let mut parent = vec![None; n];
    let mut arrival = vec![None; n];
    let mut candidates = Vec::new();
    for v in 0..n {
        if dist[v] == usize::MAX {
            continue;
        }
        arrival[v] = Some(dist[v] as f64);
        if v == root.index() {
            continue;
        }
        candidates.clear();
        candidates.extend(nbrs[v].iter().copied().filter(|&u| dist[u] + 1 == dist[v]));
        let pick = if candidates.len() == 1 {
            candidates[0]
        } else {
            candidates[rng.random_range(0..candidates.len())]
        };
        parent[v] = Some(NodeId(pick));
    }
    Ok(TreeSample::from_parts(root, 0.0, parent, arrival))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::sampler::check_tree;

    #[test]
    fn path_graph_has_unique_tree() {
        let g = StaticGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let t = bfs_tree(&g, NodeId(0), &mut stream(1, "t", 0)).unwrap();
        assert_eq!(t.parent, vec![None, Some(NodeId(0)), Some(NodeId(1))]);
        assert!(!t.partial);
        check_tree(&t).unwrap();
    }

    #[test]
    fn four_cycle_tie_is_fair() {
        let g = StaticGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let mut rng = stream(9, "cycle", 0);
        let trials = 20_000;
        let mut via_one = 0;
        for _ in 0..trials {
            let t = bfs_tree(&g, NodeId(0), &mut rng).unwrap();
            match t.parent[2] {
                Some(NodeId(1)) => via_one += 1,
                Some(NodeId(3)) => {}
                other => panic!("unexpected parent {other:?}"),
            }
        }
        // binomial(20000, 1/2): sd ≈ 70.7
        assert!((via_one as f64 - 10_000.0).abs() < 3.0 * 70.8, "{via_one}");
    }

    #[test]
    fn disconnected_graph_gives_partial_tree() {
        let g = StaticGraph::from_edges(5, &[(0, 1), (1, 2), (3, 4)]).unwrap();
        let t = bfs_tree(&g, NodeId(1), &mut stream(0, "t", 0)).unwrap();
        assert!(t.partial);
        assert_eq!(t.reached(), vec![NodeId(0), NodeId(1), NodeId(2)]);
        check_tree(&t).unwrap();
        assert!(bfs_tree(&g, NodeId(5), &mut stream(0, "t", 0)).is_err());
    }
}
