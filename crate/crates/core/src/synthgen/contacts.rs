use rand::Rng;
use rand_distr::{Distribution, Pareto};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::netcore::{ContactEvent, NodeId, StaticGraph, TemporalNetwork};
use crate::rng::stream;

/// Synthetic traces use one-second steps, so times and steps coincide.
pub const SYNTH_GRANULARITY: f64 = 1.0;

fn unit_event(a: usize, b: usize, t: f64) -> ContactEvent {
    ContactEvent::new(NodeId(a), NodeId(b), t, t + 1.0).expect("generated pair is valid")
}

/// Every unordered pair is in contact during step `t` with probability
/// `contact_fraction`, independently per step.
pub fn gen_random_contacts(n: usize, contact_fraction: f64, steps: usize, seed: u64) -> Result<TemporalNetwork> {
    if n < 2 {
        return Err(Error::invalid(format!(
            "random contacts need at least 2 nodes, got {n}"
        )));
    }
    if !(contact_fraction > 0.0 && contact_fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "contact fraction must lie in (0, 1], got {contact_fraction}"
        )));
    }
    let events: Vec<ContactEvent> = (0..steps)
        .into_par_iter()
        .flat_map_iter(|t| {
            let mut rng = stream(seed, "random-step", t as u64);
            let mut out = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if rng.random::<f64>() < contact_fraction {
                        out.push(unit_event(a, b, t as f64));
                    }
                }
            }
            out
        })
        .collect();
    TemporalNetwork::with_span(n, events, SYNTH_GRANULARITY, 0.0, steps as f64)
}

/// Contact instants for one link: gaps are Pareto(`min_gap`,
/// `tail_exponent`), and the first instant falls uniformly inside a first
/// gap so links do not all fire at step 0. Instants are floored to whole
/// steps.
pub fn levy_instants<R: Rng + ?Sized>(steps: usize, tail_exponent: f64, min_gap: f64, rng: &mut R) -> Result<Vec<f64>> {
    if !(tail_exponent > 1.0) {
        return Err(Error::invalid(format!(
            "tail exponent must exceed 1, got {tail_exponent}"
        )));
    }
    if !(min_gap > 0.0) {
        return Err(Error::invalid(format!("minimum gap must be positive, got {min_gap}")));
    }
    let pareto = Pareto::new(min_gap, tail_exponent).map_err(|e| Error::invalid(e.to_string()))?;
    let mut t = rng.random::<f64>() * pareto.sample(rng);
    let mut out: Vec<f64> = Vec::new();
    while t < steps as f64 {
        let step = t.floor();
        if out.last() != Some(&step) {
            out.push(step);
        }
        t += pareto.sample(rng);
    }
    Ok(out)
}

/// Turns each topology edge into unit-length contacts at power-law spaced
/// instants. Edge `k` (in `StaticGraph::edges` order) uses its own stream.
pub fn animate_levy(
    topology: &StaticGraph,
    steps: usize,
    tail_exponent: f64,
    min_gap: f64,
    seed: u64,
) -> Result<TemporalNetwork> {
    animate_levy_by_edge(topology, steps, tail_exponent, |_, _| min_gap, seed)
}

/// As `animate_levy`, with the minimum gap chosen per edge `(a, b)`.
pub fn animate_levy_by_edge(
    topology: &StaticGraph,
    steps: usize,
    tail_exponent: f64,
    min_gap: impl Fn(usize, usize) -> f64 + Sync,
    seed: u64,
) -> Result<TemporalNetwork> {
    let edges = topology.edges();
    let per_edge = edges
        .par_iter()
        .enumerate()
        .map(|(k, &(a, b, _))| {
            let mut rng = stream(seed, "levy-edge", k as u64);
            let times = levy_instants(steps, tail_exponent, min_gap(a, b), &mut rng)?;
            Ok(times.into_iter().map(|t| unit_event(a, b, t)).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    if edges.is_empty() {
        // still validate the timing parameters
        levy_instants(0, tail_exponent, min_gap(0, 0), &mut stream(seed, "levy-edge", 0))?;
    }
    let events = per_edge.into_iter().flatten().collect();
    TemporalNetwork::with_span(topology.n_nodes(), events, SYNTH_GRANULARITY, 0.0, steps as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_fraction_is_complete_every_step() {
        let net = gen_random_contacts(5, 1.0, 3, 1).unwrap();
        assert_eq!(net.events().len(), 30);
        assert_eq!(net.span_end(), 3.0);
    }

    #[test]
    fn random_contacts_are_deterministic() {
        let a = gen_random_contacts(10, 0.2, 50, 4).unwrap();
        let b = gen_random_contacts(10, 0.2, 50, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn steep_tail_is_near_periodic() {
        let g = StaticGraph::from_edges(2, &[(0, 1)]).unwrap();
        let net = animate_levy(&g, 200, 500.0, 1.0, 2).unwrap();
        let starts: Vec<f64> = net.events().iter().map(|e| e.start).collect();
        assert!(starts.len() >= 195, "{}", starts.len());
        assert!(starts.windows(2).all(|w| w[1] - w[0] <= 2.0));
    }

    #[test]
    fn empty_topology_has_no_contacts() {
        let net = animate_levy(&StaticGraph::empty(4), 100, 1.5, 1.0, 0).unwrap();
        assert!(net.events().is_empty());
        assert!(animate_levy(&StaticGraph::empty(4), 100, 1.0, 1.0, 0).is_err());
    }
}
