//! Temporal edge-list ingestion and windowing.
//!
//! The on-disk format is one record per line, `timestamp src dst [count]`,
//! with fields separated by a run of whitespace or by a single comma. Lines
//! starting with `#` are comments. Node labels are arbitrary strings interned
//! to dense [`NodeId`]s in first-seen order.

use std::collections::{BTreeMap, HashMap};

use log::warn;

use crate::error::{Error, Result};
use crate::graph::{DynamicNetwork, NodeId, Pair, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EdgeRecord {
    pub timestamp: i64,
    pub src: NodeId,
    pub dst: NodeId,
    pub count: u64,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct ParseOptions {
    pub comment_prefix: char,
    /// Accept and ignore fields after the count instead of rejecting the line.
    pub ignore_extra_fields: bool,
}

impl Default for ParseOptions {
    fn default() -> Self {
        ParseOptions {
            comment_prefix: '#',
            ignore_extra_fields: false,
        }
    }
}

/// Label to id table, in first-seen order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct NodeInterner {
    labels: Vec<String>,
    ids: HashMap<String, NodeId>,
}

impl NodeInterner {
    pub fn intern(&mut self, label: &str) -> NodeId {
        if let Some(&id) = self.ids.get(label) {
            return id;
        }
        let id = NodeId::from(self.labels.len());
        self.labels.push(label.to_owned());
        self.ids.insert(label.to_owned(), id);
        id
    }

    pub fn get(&self, label: &str) -> Option<NodeId> {
        self.ids.get(label).copied()
    }

    pub fn label(&self, id: NodeId) -> Option<&str> {
        self.labels.get(id.index()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

#[derive(Debug, Clone, Default)]
pub struct EdgeStream {
    pub records: Vec<EdgeRecord>,
    pub interner: NodeInterner,
}

fn split_fields(line: &str) -> std::result::Result<Vec<&str>, String> {
    if !line.contains(',') {
        return Ok(line.split_whitespace().collect());
    }
    let mut fields = Vec::new();
    for part in line.split(',') {
        let before = fields.len();
        fields.extend(part.split_whitespace());
        if fields.len() == before {
            return Err("empty field between commas".into());
        }
    }
    Ok(fields)
}

pub fn parse_edge_stream(text: &str, opts: &ParseOptions) -> Result<EdgeStream> {
    let mut stream = EdgeStream::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with(opts.comment_prefix) {
            continue;
        }
        let fields = split_fields(trimmed).map_err(|msg| Error::Parse { line, msg })?;
        if fields.len() < 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected `timestamp src dst [count]`, found {} field(s)", fields.len()),
            });
        }
        if fields.len() > 4 && !opts.ignore_extra_fields {
            return Err(Error::Parse {
                line,
                msg: format!("expected at most 4 fields, found {}", fields.len()),
            });
        }
        let timestamp: i64 = fields[0].parse().map_err(|_| Error::Parse {
            line,
            msg: format!("timestamp `{}` is not an integer", fields[0]),
        })?;
        let count = match fields.get(3) {
            None => 1,
            Some(f) => {
                let c: i64 = f.parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!("count `{f}` is not an integer"),
                })?;
                if c <= 0 {
                    return Err(Error::RejectedRecord {
                        line,
                        msg: format!("count must be positive, got {c}"),
                    });
                }
                c as u64
            }
        };
        let src = stream.interner.intern(fields[1]);
        let dst = stream.interner.intern(fields[2]);
        stream.records.push(EdgeRecord {
            timestamp,
            src,
            dst,
            count,
            line,
        });
    }
    Ok(stream)
}

/// Outcome of windowing: the network plus the number of self-loop edges
/// that were dropped.
#[derive(Debug, Clone)]
pub struct Windowed {
    pub network: DynamicNetwork,
    pub dropped_self_loops: u64,
}

/// Buckets records into snapshots `t = floor(timestamp / width)`, filling
/// empty windows between the first and last populated one.
pub fn window_into_snapshots(
    records: &[EdgeRecord],
    window_width: i64,
    n_nodes_override: Option<usize>,
) -> Result<Windowed> {
    if window_width < 1 {
        return Err(Error::config(format!(
            "window width must be >= 1, got {window_width}"
        )));
    }
    if records.is_empty() {
        return Err(Error::NoRecords);
    }
    let interned = records
        .iter()
        .map(|r| r.src.index().max(r.dst.index()) + 1)
        .max()
        .unwrap_or(0);
    let n_nodes = match n_nodes_override {
        Some(n) if n < interned => {
            return Err(Error::config(format!(
                "node count override {n} is smaller than the {interned} nodes seen in the input"
            )))
        }
        Some(n) => n,
        None => interned,
    };

    let mut windows: BTreeMap<i64, BTreeMap<Pair, u64>> = BTreeMap::new();
    let mut dropped = 0u64;
    for r in records {
        let t = r.timestamp.div_euclid(window_width);
        let w = windows.entry(t).or_default();
        match Pair::new(r.src, r.dst) {
            Some(p) => *w.entry(p).or_insert(0) += r.count,
            None => dropped += r.count,
        }
    }
    if dropped > 0 {
        warn!("dropped {dropped} self-loop edge(s)");
    }

    let first = *windows.keys().next().expect("non-empty");
    let last = *windows.keys().next_back().expect("non-empty");
    let snapshots = (first..=last)
        .map(|t| match windows.remove(&t) {
            Some(edges) => Snapshot::from_sorted(t, n_nodes, edges.into_iter().collect()),
            None => Snapshot::empty(t, n_nodes),
        })
        .collect();
    Ok(Windowed {
        network: DynamicNetwork::new(n_nodes, snapshots)?,
        dropped_self_loops: dropped,
    })
}

/// Parses and windows in one step, attaching node labels to the network.
pub fn load_network(
    text: &str,
    window_width: i64,
    n_nodes_override: Option<usize>,
) -> Result<Windowed> {
    let stream = parse_edge_stream(text, &ParseOptions::default())?;
    let mut w = window_into_snapshots(&stream.records, window_width, n_nodes_override)?;
    let mut labels = stream.interner.labels().to_vec();
    labels.extend((labels.len()..w.network.n_nodes()).map(|i| format!("#{i}")));
    w.network = w.network.with_labels(labels);
    Ok(w)
}
