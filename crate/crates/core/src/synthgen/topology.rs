use rand::Rng;

use crate::error::{Error, Result};
use crate::netcore::StaticGraph;
use crate::rng::stream;

/// Resampling attempts before a Waxman draw gives up on connectivity.
pub const WAXMAN_RETRIES: usize = 200;

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v <= 1.0) {
        return Err(Error::invalid(format!("{name} must lie in (0, 1], got {v}")));
    }
    Ok(())
}

/// Waxman graph on a square of side `side`: nodes are placed uniformly and
/// each pair is linked with probability `α·exp(−β·d)`. The whole graph is
/// redrawn until it is connected.
pub fn gen_waxman_topology(n: usize, alpha: f64, beta: f64, side: f64, seed: u64) -> Result<StaticGraph> {
    check_unit("alpha", alpha)?;
    check_unit("beta", beta)?;
    if !(side > 0.0) || !side.is_finite() {
        return Err(Error::invalid(format!(
            "Waxman side length must be positive, got {side}"
        )));
    }
    if n == 0 {
        return Err(Error::invalid("Waxman graph needs at least one node"));
    }
    let mut largest = 0;
    for attempt in 0..WAXMAN_RETRIES {
        let mut rng = stream(seed, "waxman", attempt as u64);
        let g = waxman_draw(n, alpha, beta, side, &mut rng)?;
        if g.is_connected() {
            return Ok(g);
        }
        let comps = g.components();
        let mut sizes = vec![0; n];
        for c in comps {
            sizes[c] += 1;
        }
        largest = largest.max(sizes.into_iter().max().unwrap_or(0));
    }
    Err(Error::RetryLimit {
        attempts: WAXMAN_RETRIES,
        msg: format!(
            "no connected Waxman graph with n={n}, alpha={alpha}, beta={beta}, side={side}; largest component seen had {largest} nodes"
        ),
    })
}

/// One unconditioned Waxman draw. Node positions come first, then pair
/// coins in `(i, j)` order with `i < j`.
pub fn waxman_draw<R: Rng + ?Sized>(n: usize, alpha: f64, beta: f64, side: f64, rng: &mut R) -> Result<StaticGraph> {
    let pos: Vec<(f64, f64)> = (0..n)
        .map(|_| (side * rng.random::<f64>(), side * rng.random::<f64>()))
        .collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = ((pos[i].0 - pos[j].0).powi(2) + (pos[i].1 - pos[j].1).powi(2)).sqrt();
            if rng.random::<f64>() < alpha * (-beta * d).exp() {
                edges.push((i, j));
            }
        }
    }
    StaticGraph::from_edges(n, &edges)
}

/// Generalised linear preferential growth. Starts from a clique on
/// `m + 1` nodes; each later node links to `m` distinct existing nodes,
/// picking `v` with probability proportional to `degree(v) − β`.
pub fn gen_glp_topology(n: usize, m: usize, beta: f64, seed: u64) -> Result<StaticGraph> {
    if m == 0 || n <= m {
        return Err(Error::invalid(format!("GLP needs n > m >= 1, got n={n}, m={m}")));
    }
    if !(beta < 1.0) || !beta.is_finite() {
        return Err(Error::invalid(format!("GLP beta must be below 1, got {beta}")));
    }
    let mut edges = Vec::new();
    for i in 0..=m {
        for j in i + 1..=m {
            edges.push((i, j));
        }
    }
    let mut rng = stream(seed, "glp", 0);
    grow_preferential(&mut edges, m + 1, n, m, beta, &mut rng);
    StaticGraph::from_edges(n, &edges)
}

/// Adds nodes `start..n` to `edges`, each attaching to `m` distinct earlier
/// nodes with weight `degree − β`. Existing degrees must exceed `β`.
pub(crate) fn grow_preferential<R: Rng + ?Sized>(
    edges: &mut Vec<(usize, usize)>,
    start: usize,
    n: usize,
    m: usize,
    beta: f64,
    rng: &mut R,
) {
    let mut degree = vec![0usize; n];
    for &(a, b) in edges.iter() {
        degree[a] += 1;
        degree[b] += 1;
    }
    for v in start..n {
        let mut chosen: Vec<usize> = Vec::with_capacity(m);
        for _ in 0..m.min(v) {
            let weight = |u: usize| {
                if chosen.contains(&u) {
                    0.0
                } else {
                    degree[u] as f64 - beta
                }
            };
            let total: f64 = (0..v).map(weight).sum();
            let mut x = rng.random::<f64>() * total;
            let mut pick = None;
            for u in 0..v {
                let w = weight(u);
                if w <= 0.0 {
                    continue;
                }
                pick = Some(u);
                if x < w {
                    break;
                }
                x -= w;
            }
            chosen.push(pick.expect("positive attachment weight"));
        }
        for &u in &chosen {
            edges.push((u, v));
            degree[u] += 1;
            degree[v] += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glp_growth_accounting() {
        let g = gen_glp_topology(10, 1, 0.0, 3).unwrap();
        assert_eq!(g.edge_count(), 9);
        assert!(g.is_connected());
        let g = gen_glp_topology(50, 2, 0.2, 3).unwrap();
        assert_eq!(g.edge_count(), 3 + 2 * 47);
        assert!(g.is_connected());
    }

    #[test]
    fn glp_rejects_bad_parameters() {
        assert!(gen_glp_topology(3, 3, 0.2, 0).is_err());
        assert!(gen_glp_topology(5, 0, 0.2, 0).is_err());
        assert!(gen_glp_topology(5, 1, 1.0, 0).is_err());
    }

    #[test]
    fn waxman_limits() {
        let g = gen_waxman_topology(20, 1.0, 1e-9, 1.0, 1).unwrap();
        assert!(g.edge_count() >= 185);
        assert!(gen_waxman_topology(20, 0.0, 0.3, 1.0, 1).is_err());
    }

    #[test]
    fn waxman_retry_limit_reports() {
        let err = gen_waxman_topology(40, 0.01, 1.0, 1.0, 1).unwrap_err();
        assert!(matches!(err, Error::RetryLimit { .. }), "{err}");
    }
}
