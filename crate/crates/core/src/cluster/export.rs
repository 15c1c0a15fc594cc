use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::netcore::StaticGraph;

fn node_name(i: usize, labels: Option<&[String]>) -> String {
    labels.and_then(|l| l.get(i)).cloned().unwrap_or_else(|| i.to_string())
}

/// Incident weight sums scaled so the strongest node has size 1.
pub fn node_sizes(g: &StaticGraph) -> Vec<f64> {
    let s = g.strength();
    let max = s.iter().cloned().fold(0.0, f64::max);
    s.into_iter().map(|v| if max > 0.0 { v / max } else { 0.0 }).collect()
}

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Undirected DOT graph. Node width is proportional to incident weight and
/// edge pen width to link weight.
pub fn write_dot<W: Write>(g: &StaticGraph, labels: Option<&[String]>, mut w: W) -> std::io::Result<()> {
    let sizes = node_sizes(g);
    let strength = g.strength();
    let max_w = g.edges().iter().map(|e| e.2).fold(0.0, f64::max);
    writeln!(w, "graph hbar {{")?;
    writeln!(w, "  node [shape=circle, fixedsize=true];")?;
    for i in 0..g.n_nodes() {
        writeln!(
            w,
            "  n{i} [label=\"{}\", width={:.4}, strength={:.6}];",
            dot_escape(&node_name(i, labels)),
            sizes[i],
            strength[i]
        )?;
    }
    for (a, b, x) in g.edges() {
        let pen = if max_w > 0.0 { 4.0 * x / max_w } else { 0.0 };
        writeln!(w, "  n{a} -- n{b} [weight={x:.6}, penwidth={pen:.4}];")?;
    }
    writeln!(w, "}}")
}

/// Edge list with header `source,target,weight`.
pub fn write_edges_csv<W: Write>(g: &StaticGraph, labels: Option<&[String]>, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["source", "target", "weight"])?;
    for (a, b, x) in g.edges() {
        out.write_record([node_name(a, labels), node_name(b, labels), x.to_string()])?;
    }
    out.flush().map_err(|e| Error::io("<edge csv>", e))
}

/// Node table with header `node,label,strength,size`.
pub fn write_nodes_csv<W: Write>(g: &StaticGraph, labels: Option<&[String]>, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["node", "label", "strength", "size"])?;
    let sizes = node_sizes(g);
    for (i, s) in g.strength().into_iter().enumerate() {
        out.write_record([i.to_string(), node_name(i, labels), s.to_string(), sizes[i].to_string()])?;
    }
    out.flush().map_err(|e| Error::io("<node csv>", e))
}

pub fn save_dot(g: &StaticGraph, labels: Option<&[String]>, path: &Path) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    write_dot(g, labels, &mut f).map_err(|e| Error::io(path, e))?;
    f.flush().map_err(|e| Error::io(path, e))
}
