use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::graph::StaticGraph;
use super::matrix::SymMatrix;
use super::NodeId;
use crate::error::{Error, Result};

/// One undirected contact between two nodes.
///
/// A contact with `end > start` is active on the half-open interval
/// `[start, end)`; a contact with `end == start` is a single instant. A
/// message can cross the contact at any active instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactEvent {
    pub a: NodeId,
    pub b: NodeId,
    pub start: f64,
    pub end: f64,
}

impl ContactEvent {
    /// Canonicalises the pair so `a < b`.
    pub fn new(a: NodeId, b: NodeId, start: f64, end: f64) -> Result<Self> {
        if a == b {
            return Err(Error::invalid(format!("self-contact on node {}", a.index())));
        }
        if !start.is_finite() || !end.is_finite() {
            return Err(Error::NonFinite("contact timestamps"));
        }
        if end < start {
            return Err(Error::invalid(format!(
                "contact ends ({end}) before it starts ({start})"
            )));
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        Ok(ContactEvent { a, b, start, end })
    }

    pub fn is_instant(&self) -> bool {
        self.end == self.start
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    /// Earliest instant `>= t` at which this contact is active.
    #[inline]
    pub fn first_active_at_or_after(&self, t: f64) -> Option<f64> {
        let tau = if t > self.start { t } else { self.start };
        if tau < self.end || (tau == self.start && self.is_instant()) {
            Some(tau)
        } else {
            None
        }
    }

    pub fn other(&self, v: NodeId) -> NodeId {
        if v == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// Time-sorted contact trace over dense node ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalNetwork {
    n_nodes: usize,
    events: Vec<ContactEvent>,
    granularity: f64,
    origin: f64,
    span_end: f64,
    labels: Vec<String>,
}

impl TemporalNetwork {
    /// Validates, merges overlapping contacts on the same pair, and sorts by
    /// `(start, end, a, b)`. The span runs from the earliest start to the
    /// latest end. Labels default to the decimal node ids.
    pub fn new(n_nodes: usize, events: Vec<ContactEvent>, granularity: f64) -> Result<Self> {
        let events = merge_overlapping(events);
        let origin = events.iter().map(|e| e.start).fold(f64::INFINITY, f64::min);
        let span_end = events.iter().map(|e| e.end).fold(f64::NEG_INFINITY, f64::max);
        let (origin, span_end) = if events.is_empty() {
            (0.0, 0.0)
        } else {
            (origin, span_end)
        };
        Self::assemble(n_nodes, events, granularity, origin, span_end)
    }

    /// As [`TemporalNetwork::new`] but with an explicit observation window,
    /// used by generators whose step 0 may carry no contacts.
    pub fn with_span(
        n_nodes: usize,
        events: Vec<ContactEvent>,
        granularity: f64,
        origin: f64,
        span_end: f64,
    ) -> Result<Self> {
        if !(span_end >= origin) {
            return Err(Error::invalid(format!("span [{origin}, {span_end}) is empty")));
        }
        let events = merge_overlapping(events);
        if let Some(e) = events.iter().find(|e| e.start < origin || e.end > span_end) {
            return Err(Error::invalid(format!(
                "contact [{}, {}] lies outside span [{origin}, {span_end}]",
                e.start, e.end
            )));
        }
        Self::assemble(n_nodes, events, granularity, origin, span_end)
    }

    fn assemble(
        n_nodes: usize,
        events: Vec<ContactEvent>,
        granularity: f64,
        origin: f64,
        span_end: f64,
    ) -> Result<Self> {
        if !(granularity > 0.0) || !granularity.is_finite() {
            return Err(Error::invalid(format!(
                "granularity must be positive, got {granularity}"
            )));
        }
        if let Some(e) = events.iter().find(|e| e.b.index() >= n_nodes) {
            return Err(Error::invalid(format!(
                "node {} out of range for {n_nodes} nodes",
                e.b.index()
            )));
        }
        Ok(TemporalNetwork {
            n_nodes,
            events,
            granularity,
            origin,
            span_end,
            labels: (0..n_nodes).map(|i| i.to_string()).collect(),
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_nodes {
            return Err(Error::DimensionMismatch {
                expected: self.n_nodes,
                got: labels.len(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::invalid(format!("duplicate node label {dup:?}")));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn events(&self) -> &[ContactEvent] {
        &self.events
    }

    pub fn granularity(&self) -> f64 {
        self.granularity
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn span_end(&self) -> f64 {
        self.span_end
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// `{external_label: node_id}`.
    pub fn label_map(&self) -> BTreeMap<String, usize> {
        self.labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect()
    }

    /// Discrete step of timestamp `t`: `floor((t - origin) / granularity)`.
    pub fn step_of(&self, t: f64) -> i64 {
        ((t - self.origin) / self.granularity).floor() as i64
    }

    pub fn time_of_step(&self, step: i64) -> f64 {
        self.origin + step as f64 * self.granularity
    }

    /// Number of whole or partial steps in the span.
    pub fn n_steps(&self) -> usize {
        ((self.span_end - self.origin) / self.granularity).ceil().max(0.0) as usize
    }

    /// Contact indices per node, each list sorted by start time.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.n_nodes];
        for (k, e) in self.events.iter().enumerate() {
            inc[e.a.index()].push(k);
            inc[e.b.index()].push(k);
        }
        inc
    }
}

/// Union of overlapping intervals per pair, then a global sort.
fn merge_overlapping(mut events: Vec<ContactEvent>) -> Vec<ContactEvent> {
    events.sort_by(|x, y| {
        (x.a, x.b)
            .cmp(&(y.a, y.b))
            .then(x.start.total_cmp(&y.start))
            .then(x.end.total_cmp(&y.end))
    });
    let mut merged: Vec<ContactEvent> = Vec::with_capacity(events.len());
    for e in events {
        if let Some(last) = merged.last_mut() {
            if last.a == e.a && last.b == e.b && (e.start < last.end || e.start == last.start) {
                last.end = last.end.max(e.end);
                continue;
            }
        }
        merged.push(e);
    }
    merged.sort_by(|x, y| {
        x.start
            .total_cmp(&y.start)
            .then(x.end.total_cmp(&y.end))
            .then((x.a, x.b).cmp(&(y.a, y.b)))
    });
    merged
}

/// Static graph weighting each pair by its contact time inside `[t0, t1)`,
/// normalised by the window length.
pub fn aggregate_static(net: &TemporalNetwork, t0: f64, t1: f64) -> Result<StaticGraph> {
    if !(t0 < t1) {
        return Err(Error::invalid(format!("window [{t0}, {t1}) is empty")));
    }
    let n = net.n_nodes();
    let mut adj = SymMatrix::zeros(n);
    let len = t1 - t0;
    for e in net.events() {
        let overlap = e.end.min(t1) - e.start.max(t0);
        if overlap > 0.0 {
            let (i, j) = (e.a.index(), e.b.index());
            adj.set(i, j, adj.get(i, j) + overlap / len);
        }
    }
    StaticGraph::from_adjacency(adj)
}
