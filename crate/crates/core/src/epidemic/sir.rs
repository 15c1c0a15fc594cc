use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{NodeId, TemporalNetwork};
use crate::rng::{mix, stream};
use crate::sampler::{FloodIndex, Spreader};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    /// Probability that one contact between an infectious and a susceptible
    /// node transmits.
    pub p_transmit: f64,
    /// Mean infectious period in steps. Periods are Poisson distributed; an
    /// infinite mean means nodes never recover.
    pub recovery_mean: f64,
    /// Step at which the seed node becomes infectious.
    pub start_step: i64,
    /// Steps simulated; `None` runs to the end of the trace.
    #[serde(default)]
    pub horizon: Option<usize>,
    /// Re-draw transmission at every step a long contact stays active,
    /// instead of once per contact.
    #[serde(default)]
    pub per_step: bool,
}

impl Default for SirParams {
    /// Probability 0.5, mean infectious period 80 steps, start at step 250.
    fn default() -> Self {
        SirParams {
            p_transmit: 0.5,
            recovery_mean: 80.0,
            start_step: 250,
            horizon: None,
            per_step: false,
        }
    }
}

impl SirParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_transmit) {
            return Err(Error::invalid(format!(
                "transmission probability must lie in [0, 1], got {}",
                self.p_transmit
            )));
        }
        if !(self.recovery_mean > 0.0) {
            return Err(Error::invalid(format!(
                "mean infectious period must be positive, got {}",
                self.recovery_mean
            )));
        }
        Ok(())
    }

    /// Number of steps simulated on `net`.
    pub fn steps_on(&self, net: &TemporalNetwork) -> Result<usize> {
        let total = net.n_steps() as i64;
        if self.start_step < 0 || self.start_step >= total {
            return Err(Error::invalid(format!(
                "start step {} outside the trace's {total} steps",
                self.start_step
            )));
        }
        let left = (total - self.start_step) as usize;
        Ok(self.horizon.unwrap_or(left))
    }
}

/// One simulated outbreak.
#[derive(Debug, Clone, PartialEq)]
pub struct SirRun {
    pub seed_node: NodeId,
    /// Time each node became infectious.
    pub infected_at: Vec<Option<f64>>,
    /// Time each infected node recovered (infinite when it never does).
    pub recovered_at: Vec<Option<f64>>,
    /// Compartment sizes at the start of each step, `horizon + 1` entries.
    pub susceptible: Vec<usize>,
    pub infectious: Vec<usize>,
    pub recovered: Vec<usize>,
}

impl SirRun {
    pub fn ever_infected(&self) -> Vec<NodeId> {
        (0..self.infected_at.len())
            .filter(|&v| self.infected_at[v].is_some())
            .map(NodeId)
            .collect()
    }
}

fn unit_uniform(h: u64) -> f64 {
    (h >> 11) as f64 / (1u64 << 53) as f64
}

/// SIR outbreak from `seed_node` at `params.start_step`.
///
/// Each contact offers the infectious endpoint one chance to transmit
/// (one per step with `per_step`). Transmission draws are keyed on the
/// contact and the run seed, and infectious periods on the node, so runs
/// that differ only in `p_transmit` share their randomness.
pub fn run_sir<R: Rng + ?Sized>(
    net: &TemporalNetwork,
    seed_node: NodeId,
    params: &SirParams,
    rng: &mut R,
) -> Result<SirRun> {
    let index = FloodIndex::new(net);
    run_sir_with(net, &index, seed_node, params, rng.random())
}

pub(crate) fn run_sir_with(
    net: &TemporalNetwork,
    index: &FloodIndex,
    seed_node: NodeId,
    params: &SirParams,
    run_seed: u64,
) -> Result<SirRun> {
    params.validate()?;
    let n = net.n_nodes();
    if seed_node.index() >= n {
        return Err(Error::invalid(format!(
            "seed node {seed_node} out of range for {n} nodes"
        )));
    }
    let steps = params.steps_on(net)?;
    let g = net.granularity();
    let t0 = net.time_of_step(params.start_step);
    let deadline = t0 + steps as f64 * g;
    let period = if params.recovery_mean.is_finite() {
        Some(Poisson::new(params.recovery_mean).map_err(|e| Error::invalid(e.to_string()))?)
    } else {
        None
    };
    let recovery = |v: usize, t: f64| match &period {
        Some(p) => t + p.sample(&mut stream(run_seed, "infectious-period", v as u64)) * g,
        None => f64::INFINITY,
    };

    let mut infected_at = vec![None; n];
    let mut recovered_at = vec![None; n];
    let mut spread = Spreader::new(net, index, mix(run_seed, 0), deadline);
    let s = seed_node.index();
    infected_at[s] = Some(t0);
    recovered_at[s] = Some(recovery(s, t0));
    spread.activate(s, t0);
    while let Some(tr) = spread.next() {
        let until = recovered_at[tr.from].expect("senders are infected");
        if tr.time >= until {
            spread.deactivate(tr.from);
            continue;
        }
        if infected_at[tr.to].is_some() {
            continue;
        }
        let step = net.step_of(tr.time);
        let key = mix(mix(run_seed, tr.event as u64), (tr.from as u64) << 32 ^ step as u64);
        if unit_uniform(key) < params.p_transmit {
            infected_at[tr.to] = Some(tr.time);
            recovered_at[tr.to] = Some(recovery(tr.to, tr.time));
            spread.activate(tr.to, tr.time);
        } else if params.per_step {
            let next = net.time_of_step(step + 1);
            if next < net.events()[tr.event].end {
                spread.retry(tr.event, tr.from, next);
            }
        }
    }

    let mut susceptible = Vec::with_capacity(steps + 1);
    let mut infectious = Vec::with_capacity(steps + 1);
    let mut recovered = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        let t = t0 + k as f64 * g;
        let (mut i_count, mut r_count) = (0, 0);
        for v in 0..n {
            let Some(ti) = infected_at[v] else { continue };
            if v != s && ti >= t {
                continue;
            }
            if recovered_at[v].is_some_and(|r| r <= t) {
                r_count += 1;
            } else {
                i_count += 1;
            }
        }
        susceptible.push(n - i_count - r_count);
        infectious.push(i_count);
        recovered.push(r_count);
    }
    for r in recovered_at.iter_mut() {
        if r.is_some_and(|t| t.is_infinite()) {
            *r = None;
        }
    }
    Ok(SirRun {
        seed_node,
        infected_at,
        recovered_at,
        susceptible,
        infectious,
        recovered,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::ContactEvent;
    use crate::sampler::flood_tree;
    use crate::synthgen::gen_random_contacts;

    fn ev(a: usize, b: usize, s: f64, e: f64) -> ContactEvent {
        ContactEvent::new(NodeId(a), NodeId(b), s, e).unwrap()
    }

    fn params(p: f64) -> SirParams {
        SirParams {
            p_transmit: p,
            start_step: 0,
            ..SirParams::default()
        }
    }

    #[test]
    fn zero_probability_keeps_everyone_susceptible() {
        let net = gen_random_contacts(8, 0.3, 50, 1).unwrap();
        let run = run_sir(&net, NodeId(0), &params(0.0), &mut stream(1, "t", 0)).unwrap();
        assert_eq!(run.susceptible.len(), 51);
        assert!(run.susceptible.iter().all(|&s| s == 7));
    }

    #[test]
    fn compartments_partition_nodes() {
        let net = gen_random_contacts(12, 0.1, 200, 2).unwrap();
        let mut p = params(0.6);
        p.recovery_mean = 5.0;
        let run = run_sir(&net, NodeId(3), &p, &mut stream(2, "t", 0)).unwrap();
        assert_eq!(run.susceptible[0], 11);
        for k in 0..run.susceptible.len() {
            assert_eq!(run.susceptible[k] + run.infectious[k] + run.recovered[k], 12);
            if k > 0 {
                assert!(run.susceptible[k] <= run.susceptible[k - 1]);
                assert!(run.recovered[k] >= run.recovered[k - 1]);
            }
        }
        for v in 0..12 {
            if let (Some(i), Some(r)) = (run.infected_at[v], run.recovered_at[v]) {
                assert!(r >= i);
            }
        }
    }

    #[test]
    fn no_contacts_after_start() {
        let net = TemporalNetwork::with_span(3, vec![ev(0, 1, 1.0, 2.0)], 1.0, 0.0, 10.0).unwrap();
        let mut p = params(1.0);
        p.start_step = 5;
        let run = run_sir(&net, NodeId(0), &p, &mut stream(0, "t", 0)).unwrap();
        assert!(run.susceptible.iter().all(|&s| s == 2));
        assert_eq!(run.susceptible.len(), 6);
    }

    #[test]
    fn certain_transmission_without_recovery_matches_flooding() {
        for seed in 0..5 {
            let net = gen_random_contacts(15, 0.02, 300, seed).unwrap();
            let mut p = params(1.0);
            p.recovery_mean = f64::INFINITY;
            p.start_step = 40;
            p.horizon = Some(150);
            let run = run_sir(&net, NodeId(2), &p, &mut stream(seed, "t", 0)).unwrap();
            let tree = flood_tree(&net, NodeId(2), 40.0, 150.0, &mut stream(seed, "f", 0)).unwrap();
            assert_eq!(run.ever_infected(), tree.reached());
            assert!(run.recovered_at.iter().all(|r| r.is_none()));
        }
    }

    #[test]
    fn per_step_retries_long_contacts() {
        // one contact lasting 20 steps; per-contact gives a single chance
        let net = TemporalNetwork::with_span(2, vec![ev(0, 1, 0.0, 20.0)], 1.0, 0.0, 30.0).unwrap();
        let mut p = params(0.2);
        p.recovery_mean = f64::INFINITY;
        let (mut once, mut many) = (0, 0);
        for r in 0..400u64 {
            let a = run_sir(&net, NodeId(0), &p, &mut stream(r, "t", 0)).unwrap();
            once += a.infected_at[1].is_some() as usize;
            p.per_step = true;
            let b = run_sir(&net, NodeId(0), &p, &mut stream(r, "t", 0)).unwrap();
            many += b.infected_at[1].is_some() as usize;
            p.per_step = false;
        }
        // 0.2 vs 1 - 0.8^20 = 0.988
        assert!((60..=100).contains(&once), "{once}");
        assert!(many >= 385, "{many}");
    }

    #[test]
    fn bad_parameters_rejected() {
        let net = gen_random_contacts(4, 0.5, 10, 0).unwrap();
        let mut rng = stream(0, "t", 0);
        assert!(run_sir(&net, NodeId(0), &params(1.5), &mut rng).is_err());
        assert!(run_sir(&net, NodeId(9), &params(0.5), &mut rng).is_err());
        let mut p = params(0.5);
        p.start_step = 10;
        assert!(run_sir(&net, NodeId(0), &p, &mut rng).is_err());
        p.start_step = 0;
        p.recovery_mean = 0.0;
        assert!(run_sir(&net, NodeId(0), &p, &mut rng).is_err());
    }
}
