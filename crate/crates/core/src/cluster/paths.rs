use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{StaticGraph, SymMatrix};

/// Relative slack under which two path lengths count as equal.
const TIE_RTOL: f64 = 1e-9;

/// Turns a link weight into a path length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DistanceTransform {
    /// `1 / w`.
    #[default]
    Reciprocal,
    /// `−ln w`, with weights above 1 given length 0.
    #[value(name = "neglog")]
    NegLog,
}

impl DistanceTransform {
    pub fn length(self, w: f64) -> f64 {
        match self {
            DistanceTransform::Reciprocal => 1.0 / w,
            DistanceTransform::NegLog => -(w.min(1.0)).ln(),
        }
    }
}

impl FromStr for DistanceTransform {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reciprocal" => Ok(DistanceTransform::Reciprocal),
            "neglog" => Ok(DistanceTransform::NegLog),
            _ => Err(Error::invalid(format!(
                "unknown distance transform '{s}' (expected reciprocal or neglog)"
            ))),
        }
    }
}

/// Off-diagonal entries with negatives raised to zero and a zero diagonal.
pub fn clamp_weights(hbar: &SymMatrix) -> SymMatrix {
    SymMatrix::from_lower_fn(hbar.n(), |i, j| if i == j { 0.0 } else { hbar.get(i, j).max(0.0) })
}

/// Union of every edge that lies on at least one shortest path, with edge
/// lengths from `transform` applied to the clamped weights. Edges with
/// weight at or below `epsilon` are absent. Retained edges keep their
/// clamped `hbar` weights.
pub fn shortest_path_graph(hbar: &SymMatrix, epsilon: f64, transform: DistanceTransform) -> Result<StaticGraph> {
    if !hbar.is_finite() {
        return Err(Error::NonFinite("average graph"));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::invalid(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let n = hbar.n();
    let w = clamp_weights(hbar);
    let len: Vec<f64> = (0..n * n)
        .map(|k| {
            let x = w.get(k / n, k % n);
            if x > epsilon && k / n != k % n {
                transform.length(x)
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let used: Vec<Vec<bool>> = (0..n)
        .into_par_iter()
        .map(|s| {
            let dist = dijkstra(&len, n, s);
            let mut on = vec![false; n * n];
            for u in 0..n {
                if !dist[u].is_finite() {
                    continue;
                }
                for v in 0..n {
                    let l = len[u * n + v];
                    if l.is_finite() && dist[u] + l <= dist[v] + TIE_RTOL * dist[v].max(1.0) {
                        on[u.min(v) * n + u.max(v)] = true;
                    }
                }
            }
            on
        })
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if used.iter().any(|on| on[i * n + j]) {
                edges.push((i, j, w.get(i, j)));
            }
        }
    }
    StaticGraph::from_weighted_edges(n, &edges)
}

/// Dense O(n²) Dijkstra over an n×n length table.
fn dijkstra(len: &[f64], n: usize, s: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    dist[s] = 0.0;
    for _ in 0..n {
        let Some(u) = (0..n)
            .filter(|&u| !done[u] && dist[u].is_finite())
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)))
        else {
            break;
        };
        done[u] = true;
        for v in 0..n {
            let d = dist[u] + len[u * n + v];
            if d < dist[v] {
                dist[v] = d;
            }
        }
    }
    dist
}

/// Entries below `tau` become zero.
pub fn threshold_graph(hbar: &SymMatrix, tau: f64) -> Result<SymMatrix> {
    if !(tau >= 0.0) {
        return Err(Error::invalid(format!("threshold must be nonnegative, got {tau}")));
    }
    Ok(hbar.map(|v| if v < tau { 0.0 } else { v }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn weighted(n: usize, edges: &[(usize, usize, f64)]) -> SymMatrix {
        StaticGraph::from_weighted_edges(n, edges).unwrap().adjacency().clone()
    }

    #[test]
    fn light_triangle_edge_dropped() {
        let h = weighted(3, &[(0, 1, 0.9), (1, 2, 0.9), (0, 2, 0.1)]);
        let g = shortest_path_graph(&h, 0.0, DistanceTransform::Reciprocal).unwrap();
        assert_eq!(g.edges(), vec![(0, 1, 0.9), (1, 2, 0.9)]);
        let g = shortest_path_graph(&h, 0.0, DistanceTransform::NegLog).unwrap();
        // -ln 0.1 = 2.30 > 2 * -ln 0.9 = 0.21
        assert_eq!(g.edge_count(), 2);
    }

    #[test]
    fn star_and_uniform_complete_unchanged() {
        let star = weighted(5, &[(0, 1, 0.3), (0, 2, 0.7), (0, 3, 1.0), (0, 4, 0.2)]);
        let g = shortest_path_graph(&star, 0.0, DistanceTransform::Reciprocal).unwrap();
        assert_eq!(g.adjacency(), &star);
        let k = SymMatrix::from_lower_fn(6, |i, j| if i == j { 0.0 } else { 0.4 });
        let g = shortest_path_graph(&k, 0.0, DistanceTransform::Reciprocal).unwrap();
        assert_eq!(g.adjacency(), &k);
    }

    #[test]
    fn co_minimal_paths_all_kept() {
        // square 0-1-2-3-0 with equal weights: both routes 0→2 tie
        let h = weighted(4, &[(0, 1, 0.5), (1, 2, 0.5), (2, 3, 0.5), (3, 0, 0.5), (0, 2, 0.2)]);
        let g = shortest_path_graph(&h, 0.0, DistanceTransform::Reciprocal).unwrap();
        assert_eq!(g.edge_count(), 4);
        // a direct edge of exactly the tied length is kept too
        let h = weighted(4, &[(0, 1, 0.5), (1, 2, 0.5), (2, 3, 0.5), (3, 0, 0.5), (0, 2, 0.25)]);
        let g = shortest_path_graph(&h, 0.0, DistanceTransform::Reciprocal).unwrap();
        assert_eq!(g.edge_count(), 5);
    }

    #[test]
    fn negatives_and_epsilon() {
        let mut h = weighted(3, &[(0, 1, 0.5), (1, 2, 0.05)]);
        h.set(0, 2, -1e-6);
        h.set(1, 1, 3.0);
        let g = shortest_path_graph(&h, 0.1, DistanceTransform::Reciprocal).unwrap();
        assert_eq!(g.edges(), vec![(0, 1, 0.5)]);
        let g = shortest_path_graph(&h, 1.0, DistanceTransform::Reciprocal).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.n_nodes(), 3);
    }

    #[test]
    fn threshold_examples() {
        let h = weighted(3, &[(0, 1, 0.05), (1, 2, 0.5)]);
        assert_eq!(threshold_graph(&h, 0.0).unwrap(), h);
        let t = threshold_graph(&h, 0.1).unwrap();
        assert_eq!(t, weighted(3, &[(1, 2, 0.5)]));
        assert_eq!(threshold_graph(&h, 0.6).unwrap(), SymMatrix::zeros(3));
        assert!(threshold_graph(&h, -0.1).is_err());
    }

    #[test]
    fn transform_parses() {
        assert_eq!(
            "neglog".parse::<DistanceTransform>().unwrap(),
            DistanceTransform::NegLog
        );
        assert!("log".parse::<DistanceTransform>().is_err());
        assert_eq!(DistanceTransform::NegLog.length(2.0), 0.0);
    }
}
