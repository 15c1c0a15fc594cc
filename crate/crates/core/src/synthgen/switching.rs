use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::contacts::{animate_levy, animate_levy_by_edge, gen_random_contacts, SYNTH_GRANULARITY};
use super::topology::{gen_glp_topology, gen_waxman_topology};
use crate::error::{Error, Result};
use crate::netcore::{ContactEvent, StaticGraph, TemporalNetwork};
use crate::rng::derive_seed;

pub const DEFAULT_TAIL_EXPONENT: f64 = 1.5;
pub const DEFAULT_MIN_GAP: f64 = 1.0;
pub const DEFAULT_WAXMAN_SIDE: f64 = 1.0;
/// Placement square used by the four-segment schedule. On the unit square
/// `α·e^(−βd)` barely varies, both Waxman graphs come out near-complete and
/// their trees are indistinguishable; at side 12 they have roughly 140 and
/// 195 links for 50 nodes.
pub const SCHEDULE_WAXMAN_SIDE: f64 = 12.0;
pub const DEFAULT_GLP_M: usize = 2;
pub const DEFAULT_GLP_BETA: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeneratorKind {
    /// Independent pair coins every step.
    Random { contact_fraction: f64 },
    Waxman {
        alpha: f64,
        beta: f64,
        /// Side of the square the nodes are scattered on.
        #[serde(default = "default_side")]
        side: f64,
    },
    Glp {
        #[serde(default = "default_glp_m")]
        m_edges_per_node: usize,
        #[serde(default = "default_glp_beta")]
        beta_glp: f64,
    },
    /// Two equal cliques joined by a single link between the last node of
    /// the first clique and the first node of the second. The link has its
    /// own minimum contact gap, so the bridge can be busier than the cliques.
    Bridge {
        #[serde(default = "default_gap")]
        bridge_min_gap: f64,
    },
}

fn default_side() -> f64 {
    DEFAULT_WAXMAN_SIDE
}
fn default_glp_m() -> usize {
    DEFAULT_GLP_M
}
fn default_glp_beta() -> f64 {
    DEFAULT_GLP_BETA
}
fn default_tail() -> f64 {
    DEFAULT_TAIL_EXPONENT
}
fn default_gap() -> f64 {
    DEFAULT_MIN_GAP
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub n_nodes: usize,
    #[serde(flatten)]
    pub kind: GeneratorKind,
    /// Pareto shape of inter-contact gaps (topology kinds only).
    #[serde(default = "default_tail")]
    pub tail_exponent: f64,
    #[serde(default = "default_gap")]
    pub min_gap: f64,
    /// Overrides the seed derived from the schedule seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl GeneratorSpec {
    pub fn new(n_nodes: usize, kind: GeneratorKind) -> Self {
        GeneratorSpec {
            n_nodes,
            kind,
            tail_exponent: DEFAULT_TAIL_EXPONENT,
            min_gap: DEFAULT_MIN_GAP,
            seed: None,
        }
    }

    /// Underlying static topology; `None` for the random kind.
    pub fn topology(&self, seed: u64) -> Result<Option<StaticGraph>> {
        let n = self.n_nodes;
        Ok(match self.kind {
            GeneratorKind::Random { .. } => None,
            GeneratorKind::Waxman { alpha, beta, side } => Some(gen_waxman_topology(n, alpha, beta, side, seed)?),
            GeneratorKind::Glp {
                m_edges_per_node,
                beta_glp,
            } => Some(gen_glp_topology(n, m_edges_per_node, beta_glp, seed)?),
            GeneratorKind::Bridge { .. } => Some(bridge_topology(n)?),
        })
    }

    pub fn generate(&self, steps: usize, seed: u64) -> Result<TemporalNetwork> {
        let seed = self.seed.unwrap_or(seed);
        match self.kind {
            GeneratorKind::Random { contact_fraction } => {
                gen_random_contacts(self.n_nodes, contact_fraction, steps, seed)
            }
            kind => {
                let topo = self.topology(derive_seed(seed, "topology", 0))?.expect("topology kind");
                let animate = derive_seed(seed, "animate", 0);
                match kind {
                    GeneratorKind::Bridge { bridge_min_gap } => {
                        let h = self.n_nodes / 2;
                        let gap = |a: usize, b: usize| {
                            if (a, b) == (h - 1, h) {
                                bridge_min_gap
                            } else {
                                self.min_gap
                            }
                        };
                        animate_levy_by_edge(&topo, steps, self.tail_exponent, gap, animate)
                    }
                    _ => animate_levy(&topo, steps, self.tail_exponent, self.min_gap, animate),
                }
            }
        }
    }
}

/// Two cliques of `n / 2` nodes with one bridging link `(n/2 − 1, n/2)`.
pub fn bridge_topology(n: usize) -> Result<StaticGraph> {
    if n < 4 || !n.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "bridge topology needs an even node count >= 4, got {n}"
        )));
    }
    let h = n / 2;
    let mut edges = Vec::new();
    for base in [0, h] {
        for i in base..base + h {
            for j in i + 1..base + h {
                edges.push((i, j));
            }
        }
    }
    edges.push((h - 1, h));
    StaticGraph::from_edges(n, &edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub generator: GeneratorSpec,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchingSchedule {
    pub segments: Vec<Segment>,
}

impl SwitchingSchedule {
    /// Waxman(0.5, 0.3), Waxman(0.7, 0.3), GLP, GLP, 700 steps each, with
    /// Waxman nodes on a square of side `SCHEDULE_WAXMAN_SIDE`.
    pub fn paper_default(n: usize) -> Self {
        let glp = GeneratorKind::Glp {
            m_edges_per_node: DEFAULT_GLP_M,
            beta_glp: DEFAULT_GLP_BETA,
        };
        let kinds = [
            GeneratorKind::Waxman {
                alpha: 0.5,
                beta: 0.3,
                side: SCHEDULE_WAXMAN_SIDE,
            },
            GeneratorKind::Waxman {
                alpha: 0.7,
                beta: 0.3,
                side: SCHEDULE_WAXMAN_SIDE,
            },
            glp,
            glp,
        ];
        SwitchingSchedule {
            segments: kinds
                .into_iter()
                .map(|kind| Segment {
                    generator: GeneratorSpec::new(n, kind),
                    steps: 700,
                })
                .collect(),
        }
    }

    pub fn total_steps(&self) -> usize {
        self.segments.iter().map(|s| s.steps).sum()
    }

    /// Step index at which each segment after the first begins.
    pub fn boundaries(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut t = 0;
        for s in &self.segments[..self.segments.len().saturating_sub(1)] {
            t += s.steps;
            out.push(t);
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let s: SwitchingSchedule = serde_json::from_str(&text)?;
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }
}

/// Concatenates the segments on a shared node set. Segment `i` draws from
/// `derive_seed(seed, "segment", i)` unless its spec pins a seed. Returns the
/// trace and the segment index of every step.
pub fn gen_switching(schedule: &SwitchingSchedule, seed: u64) -> Result<(TemporalNetwork, Vec<usize>)> {
    let first = schedule
        .segments
        .first()
        .ok_or_else(|| Error::invalid("switching schedule has no segments"))?;
    let n = first.generator.n_nodes;
    let mut events: Vec<ContactEvent> = Vec::new();
    let mut labels = Vec::with_capacity(schedule.total_steps());
    let mut offset = 0.0;
    for (i, seg) in schedule.segments.iter().enumerate() {
        if seg.generator.n_nodes != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: seg.generator.n_nodes,
            });
        }
        if seg.steps == 0 {
            return Err(Error::invalid(format!("segment {i} has zero steps")));
        }
        let net = seg
            .generator
            .generate(seg.steps, derive_seed(seed, "segment", i as u64))?;
        events.extend(net.events().iter().map(|e| ContactEvent {
            start: e.start + offset,
            end: e.end + offset,
            ..*e
        }));
        labels.extend(std::iter::repeat_n(i, seg.steps));
        offset += seg.steps as f64;
    }
    let net = TemporalNetwork::with_span(n, events, SYNTH_GRANULARITY, 0.0, offset)?;
    Ok((net, labels))
}

/// Ground-truth CSV with header `step,segment_index`.
pub fn write_labels<W: Write>(labels: &[usize], mut w: W) -> std::io::Result<()> {
    writeln!(w, "step,segment_index")?;
    for (t, l) in labels.iter().enumerate() {
        writeln!(w, "{t},{l}")?;
    }
    Ok(())
}

pub fn save_labels(labels: &[usize], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    write_labels(labels, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_segment_matches_direct_generation() {
        let spec = GeneratorSpec::new(
            12,
            GeneratorKind::Waxman {
                alpha: 0.6,
                beta: 0.3,
                side: 1.0,
            },
        );
        let sched = SwitchingSchedule {
            segments: vec![Segment {
                generator: spec,
                steps: 50,
            }],
        };
        let (net, labels) = gen_switching(&sched, 7).unwrap();
        let direct = spec.generate(50, derive_seed(7, "segment", 0)).unwrap();
        assert_eq!(net.events(), direct.events());
        assert_eq!(labels, vec![0; 50]);
    }

    #[test]
    fn labels_partition_steps() {
        let sched = SwitchingSchedule::paper_default(10);
        let (net, labels) = gen_switching(&sched, 1).unwrap();
        assert_eq!(labels.len(), 2800);
        assert_eq!(sched.boundaries(), vec![700, 1400, 2100]);
        for (t, &l) in labels.iter().enumerate() {
            assert_eq!(l, t / 700);
        }
        assert_eq!(net.span_end(), 2800.0);
    }

    #[test]
    fn node_count_mismatch_rejected() {
        let mut sched = SwitchingSchedule::paper_default(10);
        sched.segments[2].generator.n_nodes = 11;
        assert!(gen_switching(&sched, 1).is_err());
        assert!(gen_switching(&SwitchingSchedule { segments: vec![] }, 1).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let sched = SwitchingSchedule::paper_default(50);
        let text = serde_json::to_string(&sched).unwrap();
        assert!(text.contains("\"kind\":\"waxman\""));
        let back: SwitchingSchedule = serde_json::from_str(&text).unwrap();
        assert_eq!(back, sched);
        let minimal: GeneratorSpec = serde_json::from_str(r#"{"kind":"glp","n_nodes":8}"#).unwrap();
        assert_eq!(minimal.tail_exponent, 1.5);
        assert_eq!(
            minimal.kind,
            GeneratorKind::Glp {
                m_edges_per_node: 2,
                beta_glp: 0.2
            }
        );
    }

    #[test]
    fn bridge_has_one_crossing_link() {
        let g = bridge_topology(8).unwrap();
        assert_eq!(g.edge_count(), 2 * 6 + 1);
        assert!(g.adjacency().get(3, 4) > 0.0);
        assert!(bridge_topology(7).is_err());
    }
}
