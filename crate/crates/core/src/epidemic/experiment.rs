use std::io::Write;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::sir::{run_sir_with, SirParams};
use crate::error::{Error, Result};
use crate::modes::quantile_sorted;
use crate::netcore::{NodeId, TemporalNetwork};
use crate::rng::{derive_seed, stream};
use crate::sampler::FloodIndex;

/// Two-sided coverage of the percentile bootstrap bands.
pub const BAND_COVERAGE: f64 = 0.95;

/// Mean susceptible count over the runs seeded at one node.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SirCurve {
    pub seed: NodeId,
    /// Step index of `s_of_t[0]`.
    pub start_step: i64,
    pub s_of_t: Vec<f64>,
    pub ci_low: Vec<f64>,
    pub ci_high: Vec<f64>,
    pub runs: usize,
}

impl SirCurve {
    /// Steps until the mean susceptible count falls below `n / 2`, linearly
    /// interpolated between the last step at or above it and the first step
    /// below.
    pub fn time_to_half(&self, n: usize) -> Option<f64> {
        let half = n as f64 / 2.0;
        let k = self.s_of_t.iter().position(|&s| s < half)?;
        if k == 0 {
            return Some(0.0);
        }
        let (a, b) = (self.s_of_t[k - 1], self.s_of_t[k]);
        Some(k as f64 - 1.0 + (a - half) / (a - b))
    }
}

/// Seed for run `run` from node `node`.
pub fn run_seed(seed: u64, node: usize, run: usize) -> u64 {
    derive_seed(derive_seed(seed, "sir-node", node as u64), "run", run as u64)
}

/// Runs `runs_per_node` outbreaks from every node and summarises each node's
/// susceptible curve by its mean and percentile bootstrap bands.
pub fn sir_experiment(
    net: &TemporalNetwork,
    params: &SirParams,
    runs_per_node: usize,
    bootstrap_resamples: usize,
    seed: u64,
) -> Result<Vec<SirCurve>> {
    if runs_per_node == 0 {
        return Err(Error::invalid("need at least one run per node"));
    }
    if bootstrap_resamples == 0 {
        return Err(Error::invalid("need at least one bootstrap resample"));
    }
    params.validate()?;
    params.steps_on(net)?;
    let n = net.n_nodes();
    let index = FloodIndex::new(net);
    let runs: Vec<Vec<usize>> = (0..n * runs_per_node)
        .into_par_iter()
        .map(|k| {
            let (v, r) = (k / runs_per_node, k % runs_per_node);
            run_sir_with(net, &index, NodeId(v), params, run_seed(seed, v, r)).map(|run| run.susceptible)
        })
        .collect::<Result<_>>()?;
    (0..n)
        .into_par_iter()
        .map(|v| {
            let mine = &runs[v * runs_per_node..(v + 1) * runs_per_node];
            let mut rng = stream(seed, "bootstrap", v as u64);
            Ok(summarise(
                NodeId(v),
                params.start_step,
                mine,
                bootstrap_resamples,
                &mut rng,
            ))
        })
        .collect()
}

fn summarise<R: Rng + ?Sized>(
    node: NodeId,
    start_step: i64,
    runs: &[Vec<usize>],
    resamples: usize,
    rng: &mut R,
) -> SirCurve {
    let len = runs[0].len();
    let r = runs.len();
    let mean_of = |pick: &[usize]| -> Vec<f64> {
        (0..len)
            .map(|t| pick.iter().map(|&i| runs[i][t] as f64).sum::<f64>() / pick.len() as f64)
            .collect()
    };
    let all: Vec<usize> = (0..r).collect();
    let s_of_t = mean_of(&all);
    let boots: Vec<Vec<f64>> = (0..resamples)
        .map(|_| {
            let pick: Vec<usize> = (0..r).map(|_| rng.random_range(0..r)).collect();
            mean_of(&pick)
        })
        .collect();
    let tail = (1.0 - BAND_COVERAGE) / 2.0;
    let mut ci_low = Vec::with_capacity(len);
    let mut ci_high = Vec::with_capacity(len);
    let mut col = vec![0.0; resamples];
    for t in 0..len {
        for (c, b) in col.iter_mut().zip(&boots) {
            *c = b[t];
        }
        col.sort_by(f64::total_cmp);
        ci_low.push(quantile_sorted(&col, tail));
        ci_high.push(quantile_sorted(&col, 1.0 - tail));
    }
    SirCurve {
        seed: node,
        start_step,
        s_of_t,
        ci_low,
        ci_high,
        runs: r,
    }
}

/// CSV with header `seed_node,t,mean_S,ci_low,ci_high`; `t` is the absolute
/// step index.
pub fn write_curves_csv<W: Write>(curves: &[SirCurve], labels: Option<&[String]>, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["seed_node", "t", "mean_S", "ci_low", "ci_high"])?;
    for c in curves {
        let name = node_name(c.seed, labels);
        for k in 0..c.s_of_t.len() {
            out.write_record([
                name.clone(),
                (c.start_step + k as i64).to_string(),
                c.s_of_t[k].to_string(),
                c.ci_low[k].to_string(),
                c.ci_high[k].to_string(),
            ])?;
        }
    }
    out.flush().map_err(|e| Error::io("<curve csv>", e))
}

fn node_name(v: NodeId, labels: Option<&[String]>) -> String {
    labels
        .and_then(|l| l.get(v.index()))
        .cloned()
        .unwrap_or_else(|| v.index().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankEntry {
    pub node: usize,
    pub label: String,
    /// Steps for the mean susceptible count to fall below half the nodes;
    /// absent when it never does.
    pub steps_to_half: Option<f64>,
}

/// Seed nodes ordered by how quickly their outbreaks infect half the
/// network; nodes that never get there come last, ties by node index.
pub fn rank_by_time_to_half(curves: &[SirCurve], n: usize, labels: Option<&[String]>) -> Vec<RankEntry> {
    let mut out: Vec<RankEntry> = curves
        .iter()
        .map(|c| RankEntry {
            node: c.seed.index(),
            label: node_name(c.seed, labels),
            steps_to_half: c.time_to_half(n),
        })
        .collect();
    out.sort_by(|a, b| match (a.steps_to_half, b.steps_to_half) {
        (Some(x), Some(y)) => x.total_cmp(&y).then(a.node.cmp(&b.node)),
        (x, y) => x.is_none().cmp(&y.is_none()).then(a.node.cmp(&b.node)),
    });
    out
}

pub fn save_ranking_json(ranking: &[RankEntry], path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(ranking)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::ContactEvent;
    use crate::synthgen::gen_random_contacts;

    #[test]
    fn single_contact_matches_closed_form() {
        // node 0 infectious from step 0, one contact with node 1 at step 6:
        // P(node 1 infected) = p · P(Poisson(mean) > 6)
        let ev = ContactEvent::new(NodeId(0), NodeId(1), 6.0, 7.0).unwrap();
        let net = TemporalNetwork::with_span(2, vec![ev], 1.0, 0.0, 10.0).unwrap();
        let params = SirParams {
            p_transmit: 0.5,
            recovery_mean: 8.0,
            start_step: 0,
            horizon: None,
            per_step: false,
        };
        let runs = 4000;
        let curves = sir_experiment(&net, &params, runs, 200, 3).unwrap();
        let mut cdf = 0.0;
        let mut term = (-8.0f64).exp();
        for k in 0..=6 {
            if k > 0 {
                term *= 8.0 / k as f64;
            }
            cdf += term;
        }
        let q = 0.5 * (1.0 - cdf);
        let want = 1.0 - q;
        let got = curves[0].s_of_t[10];
        let sigma = (q * (1.0 - q) / runs as f64).sqrt();
        assert!((got - want).abs() < 3.0 * sigma, "{got} vs {want}");
        assert_eq!(curves[0].s_of_t[6], 1.0);
        assert!(curves[0].ci_low[10] <= got && got <= curves[0].ci_high[10]);
    }

    #[test]
    fn curves_are_monotone_and_deterministic() {
        let net = gen_random_contacts(10, 0.05, 120, 5).unwrap();
        let params = SirParams {
            start_step: 10,
            recovery_mean: 20.0,
            ..SirParams::default()
        };
        let a = sir_experiment(&net, &params, 8, 50, 9).unwrap();
        let b = sir_experiment(&net, &params, 8, 50, 9).unwrap();
        assert_eq!(a, b);
        for c in &a {
            assert_eq!(c.s_of_t[0], 9.0);
            assert!(c.s_of_t.windows(2).all(|w| w[1] <= w[0]));
            assert!(c.ci_low.windows(2).all(|w| w[1] <= w[0]));
            assert!(c.ci_low.iter().zip(&c.ci_high).all(|(l, h)| l <= h));
        }
    }

    #[test]
    fn higher_probability_leaves_fewer_susceptible() {
        let net = gen_random_contacts(20, 0.02, 300, 11).unwrap();
        let mut params = SirParams {
            start_step: 0,
            recovery_mean: 30.0,
            ..SirParams::default()
        };
        let final_mean = |p: f64, params: &mut SirParams| {
            params.p_transmit = p;
            let c = sir_experiment(&net, params, 10, 1, 4).unwrap();
            c.iter().map(|c| *c.s_of_t.last().unwrap()).sum::<f64>() / c.len() as f64
        };
        assert!(final_mean(0.9, &mut params) <= final_mean(0.1, &mut params));
    }

    #[test]
    fn ranking_orders_and_exports() {
        let mk = |v: usize, s: Vec<f64>| SirCurve {
            seed: NodeId(v),
            start_step: 5,
            ci_low: s.clone(),
            ci_high: s.clone(),
            s_of_t: s,
            runs: 1,
        };
        let curves = vec![
            mk(0, vec![3.0, 3.0, 3.0]),
            mk(1, vec![3.0, 1.0, 0.0]),
            mk(2, vec![3.0, 2.0, 1.0]),
        ];
        let r = rank_by_time_to_half(&curves, 4, None);
        assert_eq!(r.iter().map(|e| e.node).collect::<Vec<_>>(), vec![1, 2, 0]);
        // node 1 passes 2.0 halfway between steps 0 and 1; node 2 sits at
        // 2.0 on step 1 and only drops below it after
        assert_eq!(r[0].steps_to_half, Some(0.5));
        assert_eq!(r[1].steps_to_half, Some(1.0));
        assert_eq!(r[1].node, 2);
        assert_eq!(r[2].steps_to_half, None);
        let mut buf = Vec::new();
        write_curves_csv(&curves[..1], None, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "seed_node,t,mean_S,ci_low,ci_high");
        assert_eq!(text.lines().nth(1).unwrap(), "0,5,3,3,3");
    }
}
