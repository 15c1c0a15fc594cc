//! Batch files.
//!
//! A batch is stored as one CSV file whose first column tags the record:
//!
//! ```text
//! batch,<n_nodes>,<seed>,static
//! batch,<n_nodes>,<seed>,temporal,<origin>,<span_end>,<granularity>
//! tree,<index>,<root>,<start_time>,<edge_count>
//! edge,<child>,<parent>
//! ```
//!
//! Each `tree` record is followed by exactly `edge_count` `edge` records.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{BatchSource, SampleBatch, TreeSample};
use crate::error::{Error, Result};
use crate::netcore::NodeId;

pub fn write_batch<W: Write>(batch: &SampleBatch, mut w: W) -> std::io::Result<()> {
    match &batch.source {
        BatchSource::Static => writeln!(w, "batch,{},{},static", batch.n_nodes, batch.seed)?,
        BatchSource::Temporal {
            origin,
            span_end,
            granularity,
        } => writeln!(
            w,
            "batch,{},{},temporal,{},{},{}",
            batch.n_nodes, batch.seed, origin, span_end, granularity
        )?,
    }
    for (i, s) in batch.samples.iter().enumerate() {
        let edges = s.edges();
        writeln!(w, "tree,{},{},{},{}", i, s.root, s.start_time, edges.len())?;
        for (c, p) in edges {
            writeln!(w, "edge,{c},{p}")?;
        }
    }
    w.flush()
}

pub fn save_batch(batch: &SampleBatch, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_batch(batch, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

pub fn load_batch(path: &Path) -> Result<SampleBatch> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_batch(file, &path.display().to_string())
}

fn field<T: std::str::FromStr>(cols: &[&str], i: usize, what: &str, name: &str, line: usize) -> Result<T> {
    cols.get(i)
        .and_then(|c| c.trim().parse().ok())
        .ok_or_else(|| Error::Parse {
            path: name.to_string(),
            line,
            msg: format!("missing or malformed {what}"),
        })
}

struct PendingTree {
    line: usize,
    root: NodeId,
    start: f64,
    expected: usize,
    edges: Vec<(NodeId, NodeId)>,
}

pub fn read_batch<R: Read>(reader: R, name: &str) -> Result<SampleBatch> {
    let perr = |line: usize, msg: String| Error::Parse {
        path: name.to_string(),
        line,
        msg,
    };
    let mut header: Option<(usize, u64, BatchSource)> = None;
    let mut samples = Vec::new();
    let mut pending: Option<PendingTree> = None;

    let finish = |p: PendingTree, n: usize, samples: &mut Vec<TreeSample>| -> Result<()> {
        if p.edges.len() != p.expected {
            return Err(perr(
                p.line,
                format!("tree declares {} edges but has {}", p.expected, p.edges.len()),
            ));
        }
        let tree = TreeSample::from_edges(n, p.root, p.start, &p.edges)
            .map_err(|e| perr(p.line, format!("invalid tree: {e}")))?;
        samples.push(tree);
        Ok(())
    };

    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| Error::io(name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        match cols[0].trim() {
            "batch" => {
                if header.is_some() {
                    return Err(perr(lineno, "duplicate batch record".into()));
                }
                let n: usize = field(&cols, 1, "n_nodes", name, lineno)?;
                let seed: u64 = field(&cols, 2, "seed", name, lineno)?;
                let source = match cols.get(3).map(|s| s.trim()) {
                    Some("static") => BatchSource::Static,
                    Some("temporal") => BatchSource::Temporal {
                        origin: field(&cols, 4, "origin", name, lineno)?,
                        span_end: field(&cols, 5, "span_end", name, lineno)?,
                        granularity: field(&cols, 6, "granularity", name, lineno)?,
                    },
                    other => return Err(perr(lineno, format!("unknown source {other:?}"))),
                };
                header = Some((n, seed, source));
            }
            "tree" => {
                let Some((n, _, _)) = header else {
                    return Err(perr(lineno, "tree record before batch record".into()));
                };
                if let Some(p) = pending.take() {
                    finish(p, n, &mut samples)?;
                }
                let index: usize = field(&cols, 1, "tree index", name, lineno)?;
                if index != samples.len() {
                    return Err(perr(
                        lineno,
                        format!("tree index {index} out of sequence (expected {})", samples.len()),
                    ));
                }
                let root: usize = field(&cols, 2, "root", name, lineno)?;
                if root >= n {
                    return Err(perr(lineno, format!("root {root} out of range")));
                }
                pending = Some(PendingTree {
                    line: lineno,
                    root: NodeId(root),
                    start: field(&cols, 3, "start_time", name, lineno)?,
                    expected: field(&cols, 4, "edge count", name, lineno)?,
                    edges: Vec::new(),
                });
            }
            "edge" => {
                let Some(p) = pending.as_mut() else {
                    return Err(perr(lineno, "edge record outside a tree".into()));
                };
                let c: usize = field(&cols, 1, "child", name, lineno)?;
                let q: usize = field(&cols, 2, "parent", name, lineno)?;
                p.edges.push((NodeId(c), NodeId(q)));
            }
            other => return Err(perr(lineno, format!("unknown record type {other:?}"))),
        }
    }
    let Some((n, seed, source)) = header else {
        return Err(Error::EmptyInput(format!("{name} has no batch record")));
    };
    if let Some(p) = pending.take() {
        finish(p, n, &mut samples)?;
    }
    Ok(SampleBatch {
        samples,
        n_nodes: n,
        seed,
        source,
    })
}
