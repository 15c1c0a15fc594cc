//! Contact-trace files.
//!
//! The canonical format is a UTF-8 CSV with header `node_a,node_b,start,end`
//! and timestamps in seconds. The whitespace format takes four leading
//! columns `a b start end` per line (extra columns are ignored, `#` starts a
//! comment), which covers most public Bluetooth contact dumps.
//!
//! External labels map to dense ids in first-seen order unless a label map
//! is supplied, in which case the map's ids are kept and unseen labels are
//! appended.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ContactEvent, NodeId, TemporalNetwork};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 4] = ["node_a", "node_b", "start", "end"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TraceFormat {
    Csv,
    Whitespace,
}

impl FromStr for TraceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TraceFormat::Csv),
            "whitespace" | "ws" | "txt" => Ok(TraceFormat::Whitespace),
            other => Err(Error::invalid(format!("unknown trace format {other:?}"))),
        }
    }
}

struct Labeller {
    ids: HashMap<String, usize>,
    labels: Vec<String>,
}

impl Labeller {
    fn new(preset: Option<&BTreeMap<String, usize>>) -> Result<Self> {
        let mut labels = Vec::new();
        let mut ids = HashMap::new();
        if let Some(map) = preset {
            labels = vec![String::new(); map.len()];
            for (label, &id) in map {
                if id >= map.len() || !labels[id].is_empty() {
                    return Err(Error::invalid(format!(
                        "label map is not a bijection onto [0, {}): bad id {id}",
                        map.len()
                    )));
                }
                labels[id] = label.clone();
                ids.insert(label.clone(), id);
            }
        }
        Ok(Labeller { ids, labels })
    }

    fn id(&mut self, label: &str) -> NodeId {
        if let Some(&i) = self.ids.get(label) {
            return NodeId(i);
        }
        let i = self.labels.len();
        self.labels.push(label.to_string());
        self.ids.insert(label.to_string(), i);
        NodeId(i)
    }
}

fn parse_time(field: &str, what: &str, path: &str, line: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        path: path.to_string(),
        line,
        msg: format!("cannot parse {what} timestamp {field:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            path: path.to_string(),
            line,
            msg: format!("non-finite {what} timestamp"),
        });
    }
    Ok(v)
}

fn row_event(labeller: &mut Labeller, fields: [&str; 4], path: &str, line: usize) -> Result<ContactEvent> {
    let (a, b) = (fields[0].trim(), fields[1].trim());
    if a.is_empty() || b.is_empty() {
        return Err(Error::Parse {
            path: path.to_string(),
            line,
            msg: "empty node label".into(),
        });
    }
    let start = parse_time(fields[2], "start", path, line)?;
    let end = parse_time(fields[3], "end", path, line)?;
    if a == b {
        return Err(Error::Parse {
            path: path.to_string(),
            line,
            msg: format!("self-contact on {a:?}"),
        });
    }
    if end < start {
        return Err(Error::Parse {
            path: path.to_string(),
            line,
            msg: format!("end {end} precedes start {start}"),
        });
    }
    let (ia, ib) = (labeller.id(a), labeller.id(b));
    ContactEvent::new(ia, ib, start, end)
}

/// Parses a trace from any reader. `name` is used in error messages.
pub fn parse_trace<R: Read>(
    reader: R,
    format: TraceFormat,
    granularity: f64,
    label_map: Option<&BTreeMap<String, usize>>,
    name: &str,
) -> Result<TemporalNetwork> {
    let mut labeller = Labeller::new(label_map)?;
    let mut events = Vec::new();
    match format {
        TraceFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(true)
                .trim(csv::Trim::All)
                .flexible(true)
                .from_reader(reader);
            let header = rdr.headers()?.clone();
            let names: Vec<String> = header.iter().map(|h| h.to_ascii_lowercase()).collect();
            if names.len() < 4 || names[..4] != CSV_HEADER {
                return Err(Error::Parse {
                    path: name.to_string(),
                    line: 1,
                    msg: format!("expected header {}, found {:?}", CSV_HEADER.join(","), names),
                });
            }
            for rec in rdr.records() {
                let rec = rec?;
                let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
                if rec.len() < 4 {
                    return Err(Error::Parse {
                        path: name.to_string(),
                        line,
                        msg: format!("expected 4 fields, found {}", rec.len()),
                    });
                }
                let fields = [&rec[0], &rec[1], &rec[2], &rec[3]];
                events.push(row_event(&mut labeller, fields, name, line)?);
            }
        }
        TraceFormat::Whitespace => {
            for (k, line) in BufReader::new(reader).lines().enumerate() {
                let lineno = k + 1;
                let line = line.map_err(|e| Error::io(name, e))?;
                let body = line.split('#').next().unwrap_or("").trim();
                if body.is_empty() {
                    continue;
                }
                let cols: Vec<&str> = body.split_whitespace().collect();
                if cols.len() < 4 {
                    return Err(Error::Parse {
                        path: name.to_string(),
                        line: lineno,
                        msg: format!("expected 4 columns, found {}", cols.len()),
                    });
                }
                events.push(row_event(
                    &mut labeller,
                    [cols[0], cols[1], cols[2], cols[3]],
                    name,
                    lineno,
                )?);
            }
        }
    }
    if events.is_empty() || labeller.labels.is_empty() {
        return Err(Error::EmptyInput(format!("{name} contains no contacts")));
    }
    let n = labeller.labels.len();
    TemporalNetwork::new(n, events, granularity)?.with_labels(labeller.labels)
}

/// Reads a trace file into a [`TemporalNetwork`].
pub fn ingest_trace(path: &Path, format: TraceFormat, granularity: f64) -> Result<TemporalNetwork> {
    ingest_trace_with_labels(path, format, granularity, None)
}

pub fn ingest_trace_with_labels(
    path: &Path,
    format: TraceFormat,
    granularity: f64,
    label_map: Option<&BTreeMap<String, usize>>,
) -> Result<TemporalNetwork> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_trace(file, format, granularity, label_map, &path.display().to_string())
}

/// Writes the canonical CSV form, one row per (merged) contact in time order.
pub fn write_trace_csv<W: Write>(net: &TemporalNetwork, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    let labels = net.labels();
    for e in net.events() {
        w.write_record([
            labels[e.a.index()].as_str(),
            labels[e.b.index()].as_str(),
            &e.start.to_string(),
            &e.end.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<trace>", e))?;
    Ok(())
}

pub fn save_trace_csv(net: &TemporalNetwork, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace_csv(net, BufWriter::new(file))
}

pub fn save_label_map(net: &TemporalNetwork, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &net.label_map())?;
    Ok(())
}

pub fn load_label_map(path: &Path) -> Result<BTreeMap<String, usize>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_reader(BufReader::new(file))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, format: TraceFormat) -> Result<TemporalNetwork> {
        parse_trace(text.as_bytes(), format, 1.0, None, "mem")
    }

    #[test]
    fn three_row_csv_remaps_labels() {
        let net = parse(
            "node_a,node_b,start,end\nA,B,0,5\nB,C,3,4\nC,A,10,12.5\n",
            TraceFormat::Csv,
        )
        .unwrap();
        assert_eq!(net.n_nodes(), 3);
        assert_eq!(net.events().len(), 3);
        assert_eq!(net.labels(), ["A", "B", "C"]);
        assert_eq!(net.label_map()["C"], 2);
        assert_eq!(net.events()[2].end, 12.5);
        assert_eq!((net.events()[2].a, net.events()[2].b), (NodeId(0), NodeId(2)));
    }

    #[test]
    fn end_before_start_names_line() {
        let err = parse("node_a,node_b,start,end\nA,B,0,5\nB,C,9,4\n", TraceFormat::Csv).unwrap_err();
        match err {
            Error::Parse { line, msg, .. } => {
                assert_eq!(line, 3);
                assert!(msg.contains("precedes"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_name_line() {
        let err = parse("node_a,node_b,start,end\nA,B,x,5\n", TraceFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse("1 2 0 5\n\n# note\n3 4 7\n", TraceFormat::Whitespace).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }));
        let err = parse("a,b,c,d\n1,2,0,1\n", TraceFormat::Csv).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            parse("node_a,node_b,start,end\n", TraceFormat::Csv),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            parse("# nothing\n", TraceFormat::Whitespace),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn whitespace_format_ignores_extra_columns() {
        let net = parse("1 2 100 160 1 0\n2 3 200 200 1 40 # x\n", TraceFormat::Whitespace).unwrap();
        assert_eq!(net.n_nodes(), 3);
        assert_eq!(net.events()[1].start, 200.0);
    }

    #[test]
    fn preset_label_map_fixes_ids() {
        let map: BTreeMap<String, usize> = [("z".to_string(), 0), ("y".to_string(), 1), ("q".to_string(), 2)].into();
        let net = parse_trace(
            "node_a,node_b,start,end\ny,z,0,1\n".as_bytes(),
            TraceFormat::Csv,
            1.0,
            Some(&map),
            "m",
        )
        .unwrap();
        assert_eq!(net.n_nodes(), 3);
        assert_eq!(net.labels(), ["z", "y", "q"]);
        let bad: BTreeMap<String, usize> = [("z".to_string(), 0), ("y".to_string(), 0)].into();
        assert!(parse_trace(
            "node_a,node_b,start,end\ny,z,0,1\n".as_bytes(),
            TraceFormat::Csv,
            1.0,
            Some(&bad),
            "m"
        )
        .is_err());
    }
}
