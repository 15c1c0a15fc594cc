use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bfs::bfs_tree_with;
use super::flood::{flood_tree_with, FloodIndex};
use super::TreeSample;
use crate::error::{Error, Result};
use crate::netcore::{NodeId, StaticGraph, TemporalNetwork};
use crate::rng::stream;

pub const SAMPLE_STREAM: &str = "sample";

/// Where a batch came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BatchSource {
    Static,
    Temporal {
        origin: f64,
        span_end: f64,
        granularity: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub samples: Vec<TreeSample>,
    pub n_nodes: usize,
    pub seed: u64,
    pub source: BatchSource,
}

/// Anything trees can be sampled from.
#[derive(Debug, Clone, Copy)]
pub enum Source<'a> {
    Static(&'a StaticGraph),
    Temporal(&'a TemporalNetwork),
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sub-batch with the given sample indices, in the given order.
    pub fn select(&self, indices: &[usize]) -> SampleBatch {
        SampleBatch {
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
            n_nodes: self.n_nodes,
            seed: self.seed,
            source: self.source.clone(),
        }
    }

    /// Indices of samples that reached every node.
    pub fn complete_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.samples[i].partial).collect()
    }

    /// The batch without partial trees. Trees started near the end of a
    /// trace run out of contacts and would otherwise form their own
    /// low-deviation mode.
    pub fn complete_only(&self) -> SampleBatch {
        self.select(&self.complete_indices())
    }

    pub fn start_times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.start_time).collect()
    }
}

/// Draws `m` trees with uniform roots (and, for traces, uniform start times
/// over the trace span). Sample `i` uses its own stream derived from
/// `(seed, i)`, so the batch does not depend on thread scheduling.
pub fn sample_batch(source: Source<'_>, m: usize, seed: u64, horizon: f64) -> Result<SampleBatch> {
    if m == 0 {
        return Err(Error::invalid("batch size must be at least 1"));
    }
    match source {
        Source::Static(g) => {
            let n = g.n_nodes();
            if n == 0 {
                return Err(Error::EmptyInput("graph has no nodes".into()));
            }
            let nbrs = g.neighbours();
            let samples = (0..m)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream(seed, SAMPLE_STREAM, i as u64);
                    let root = NodeId(rng.random_range(0..n));
                    bfs_tree_with(&nbrs, root, &mut rng)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SampleBatch {
                samples,
                n_nodes: n,
                seed,
                source: BatchSource::Static,
            })
        }
        Source::Temporal(net) => {
            let n = net.n_nodes();
            if n == 0 || net.events().is_empty() {
                return Err(Error::EmptyInput("trace has no contacts".into()));
            }
            let index = FloodIndex::new(net);
            let (t0, t1) = (net.origin(), net.span_end());
            let samples = (0..m)
                .into_par_iter()
                .map(|i| {
                    let mut rng = stream(seed, SAMPLE_STREAM, i as u64);
                    let root = NodeId(rng.random_range(0..n));
                    let start = t0 + rng.random::<f64>() * (t1 - t0);
                    flood_tree_with(net, &index, root, start, horizon, &mut rng)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SampleBatch {
                samples,
                n_nodes: n,
                seed,
                source: BatchSource::Temporal {
                    origin: t0,
                    span_end: t1,
                    granularity: net.granularity(),
                },
            })
        }
    }
}

/// Keeps each sample independently with probability `keep(sample)`.
pub fn filter_batch<R, F>(batch: &SampleBatch, keep: F, rng: &mut R) -> SampleBatch
where
    R: Rng + ?Sized,
    F: Fn(&TreeSample) -> f64,
{
    batch.select(&filter_indices(batch, keep, rng))
}

/// Indices of the samples [`filter_batch`] keeps with the same stream.
pub fn filter_indices<R, F>(batch: &SampleBatch, keep: F, rng: &mut R) -> Vec<usize>
where
    R: Rng + ?Sized,
    F: Fn(&TreeSample) -> f64,
{
    (0..batch.len())
        .filter(|&i| {
            let p = keep(&batch.samples[i]);
            // always draw so the stream position does not depend on p
            let u: f64 = rng.random();
            u < p
        })
        .collect()
}

/// Keep-probability that retains trees using edge `(a, b)` with probability
/// `p` and every other tree with certainty.
pub fn prefer_without_edge(a: NodeId, b: NodeId, p: f64) -> impl Fn(&TreeSample) -> f64 {
    move |s| if s.uses_edge(a, b) { p } else { 1.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampler::bfs_tree;

    fn triangle_tail() -> StaticGraph {
        StaticGraph::from_edges(4, &[(0, 1), (1, 2), (2, 0), (2, 3)]).unwrap()
    }

    #[test]
    fn single_sample_matches_direct_call() {
        let g = triangle_tail();
        let batch = sample_batch(Source::Static(&g), 1, 42, f64::INFINITY).unwrap();
        let mut rng = stream(42, SAMPLE_STREAM, 0);
        let root = NodeId(rng.random_range(0..4));
        let direct = bfs_tree(&g, root, &mut rng).unwrap();
        assert_eq!(batch.samples, vec![direct]);
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let g = triangle_tail();
        let a = sample_batch(Source::Static(&g), 300, 5, f64::INFINITY).unwrap();
        let b = sample_batch(Source::Static(&g), 300, 5, f64::INFINITY).unwrap();
        assert_eq!(a, b);
        let c = sample_batch(Source::Static(&g), 300, 6, f64::INFINITY).unwrap();
        assert_ne!(a, c);
        assert!(sample_batch(Source::Static(&g), 0, 5, f64::INFINITY).is_err());
    }

    #[test]
    fn filter_extremes() {
        let g = triangle_tail();
        let batch = sample_batch(Source::Static(&g), 200, 1, f64::INFINITY).unwrap();
        let all = filter_batch(&batch, |_| 1.0, &mut stream(0, "f", 0));
        assert_eq!(all, batch);
        // every spanning tree of this graph uses (2,3)
        let none = filter_batch(
            &batch,
            prefer_without_edge(NodeId(2), NodeId(3), 0.0),
            &mut stream(0, "f", 0),
        );
        assert!(none.is_empty());
    }
}
