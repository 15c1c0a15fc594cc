use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;

use super::TreeSample;
use crate::error::{Error, Result};
use crate::netcore::{NodeId, TemporalNetwork};
use crate::rng::mix;

/// Per-node contact lists prepared once per network so many floods can share
/// them.
#[derive(Debug, Clone)]
pub struct FloodIndex {
    incidence: Vec<Vec<usize>>,
    starts: Vec<Vec<f64>>,
    /// Running maximum of contact end along each node's list.
    prefix_end: Vec<Vec<f64>>,
}

impl FloodIndex {
    pub fn new(net: &TemporalNetwork) -> Self {
        let incidence = net.incidence();
        let events = net.events();
        let starts = incidence
            .iter()
            .map(|list| list.iter().map(|&k| events[k].start).collect())
            .collect();
        let prefix_end = incidence
            .iter()
            .map(|list| {
                let mut m = f64::NEG_INFINITY;
                list.iter()
                    .map(|&k| {
                        m = m.max(events[k].end);
                        m
                    })
                    .collect()
            })
            .collect();
        FloodIndex {
            incidence,
            starts,
            prefix_end,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    time: f64,
    key: u64,
    event: usize,
    from: usize,
    forward: bool,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Candidate {}
impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Candidate {
    // reversed: BinaryHeap is a max-heap and we want the earliest candidate
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.key.cmp(&self.key))
            .then(other.event.cmp(&self.event))
            .then(other.from.cmp(&self.from))
    }
}

/// Earliest-arrival engine shared by flooding and the SIR simulator.
///
/// A holder `u` whose message arrived at `t_u` can pass it over contact `e`
/// at the first active instant of `e` not before `t_u`. Candidates are popped
/// in time order; ties are ordered by a keyed hash of the contact so that
/// simultaneous contacts are processed in a seed-dependent shuffled order.
pub(crate) struct Spreader<'a> {
    net: &'a TemporalNetwork,
    index: &'a FloodIndex,
    heap: BinaryHeap<Candidate>,
    cursor: Vec<usize>,
    salt: u64,
    deadline: f64,
}

pub(crate) struct Transfer {
    pub time: f64,
    pub event: usize,
    pub from: usize,
    pub to: usize,
}

impl<'a> Spreader<'a> {
    pub(crate) fn new(net: &'a TemporalNetwork, index: &'a FloodIndex, salt: u64, deadline: f64) -> Self {
        Spreader {
            net,
            index,
            heap: BinaryHeap::new(),
            cursor: vec![usize::MAX; net.n_nodes()],
            salt,
            deadline,
        }
    }

    fn key(&self, event: usize, from: usize) -> u64 {
        mix(
            self.salt,
            (event as u64) << 1 | (from == self.net.events()[event].a.index()) as u64,
        )
    }

    fn push_forward(&mut self, u: usize) {
        let list = &self.index.incidence[u];
        let pos = self.cursor[u];
        if pos < list.len() {
            let k = list[pos];
            let t = self.net.events()[k].start;
            if t <= self.deadline {
                let key = self.key(k, u);
                self.heap.push(Candidate {
                    time: t,
                    key,
                    event: k,
                    from: u,
                    forward: true,
                });
            }
        }
    }

    /// Makes `u` a holder from time `t`, queueing its usable contacts.
    pub(crate) fn activate(&mut self, u: usize, t: f64) {
        let starts = &self.index.starts[u];
        let pos = starts.partition_point(|&s| s < t);
        // contacts that started earlier but are still active at t
        let mut j = pos;
        while j > 0 && self.index.prefix_end[u][j - 1] > t {
            j -= 1;
            let k = self.index.incidence[u][j];
            if let Some(tau) = self.net.events()[k].first_active_at_or_after(t) {
                if tau <= self.deadline {
                    let key = self.key(k, u);
                    self.heap.push(Candidate {
                        time: tau,
                        key,
                        event: k,
                        from: u,
                        forward: false,
                    });
                }
            }
        }
        self.cursor[u] = pos;
        self.push_forward(u);
    }

    /// Stops `u` from offering any further contacts.
    pub(crate) fn deactivate(&mut self, u: usize) {
        self.cursor[u] = usize::MAX;
    }

    /// Next transmission opportunity, in time order.
    pub(crate) fn next(&mut self) -> Option<Transfer> {
        while let Some(c) = self.heap.pop() {
            if c.forward {
                if self.cursor[c.from] == usize::MAX {
                    continue;
                }
                self.cursor[c.from] += 1;
                self.push_forward(c.from);
            }
            let to = self.net.events()[c.event].other(NodeId(c.from)).index();
            return Some(Transfer {
                time: c.time,
                event: c.event,
                from: c.from,
                to,
            });
        }
        None
    }

    /// Re-offers a contact at a later instant (used for per-step retries).
    pub(crate) fn retry(&mut self, event: usize, from: usize, time: f64) {
        if time <= self.deadline {
            let key = self.key(event, from);
            self.heap.push(Candidate {
                time,
                key,
                event,
                from,
                forward: false,
            });
        }
    }
}

/// Flooding tree: `root` holds the message from `start`; every contact
/// active at or after a holder's arrival passes the message on, and each
/// newly reached node records its sender as parent. Flooding stops at
/// `start + horizon` or the end of the trace.
pub fn flood_tree<R: Rng + ?Sized>(
    net: &TemporalNetwork,
    root: NodeId,
    start: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<TreeSample> {
    let index = FloodIndex::new(net);
    flood_tree_with(net, &index, root, start, horizon, rng)
}

pub fn flood_tree_with<R: Rng + ?Sized>(
    net: &TemporalNetwork,
    index: &FloodIndex,
    root: NodeId,
    start: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<TreeSample> {
    let n = net.n_nodes();
    if root.index() >= n {
        return Err(Error::invalid(format!("root {root} out of range for {n} nodes")));
    }
    if !(horizon >= 0.0) {
        return Err(Error::invalid(format!("horizon must be nonnegative, got {horizon}")));
    }
    let salt: u64 = rng.random();
    let deadline = start + horizon;
    let mut parent = vec![None; n];
    let mut arrival = vec![None; n];
    arrival[root.index()] = Some(start);
    let mut reached = 1;
    let mut spread = Spreader::new(net, index, salt, deadline);
    spread.activate(root.index(), start);
    while reached < n {
        let Some(tr) = spread.next() else { break };
        if arrival[tr.to].is_none() {
            arrival[tr.to] = Some(tr.time);
            parent[tr.to] = Some(NodeId(tr.from));
            reached += 1;
            spread.activate(tr.to, tr.time);
        }
    }
    Ok(TreeSample::from_parts(root, start, parent, arrival))
}
