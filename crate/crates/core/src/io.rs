//! Line-oriented graph and state formats, and CSV emission of sampled states.
//!
//! Graph files:
//!
//! ```text
//! graph G2
//! edge 1 v1 v2
//! edge 2 v2 v1
//! w 2 1 1/1
//! w 1 2 1/1
//! c 1 3/2
//! c 2 1.7320508075688772
//! ```
//!
//! `w i j p/q` is the weight with which material leaving edge `j` enters
//! edge `i`. Velocities written as `p/q` or integers are exact; decimals are
//! read as floating velocities.
//!
//! State files hold one or more blocks:
//!
//! ```text
//! state f
//! bp 0 1/2 1
//! v 0 1 1
//! v 1 2 -3/4
//! ```
//!
//! `v k e x` sets the value of piece `k` on edge `e`. Values may be written as
//! `p/q`, integers or decimals and are read exactly. Blank lines and text
//! after `#` are ignored in both formats.

use crate::error::{Error, Result};
use crate::graph::{Edge, EdgeId, MetricGraph, SparseVector, Velocity, VelocityProfile};
use crate::scalar::{parse_exact, parse_rational_or_decimal, rational_to_f64, Rational, Scalar};
use crate::state::{NetworkState, SampledState};
use num_complex::Complex64;
use std::collections::{BTreeMap, BTreeSet};

/// A parsed graph file.
#[derive(Clone, Debug)]
pub struct GraphFile {
    pub graph: MetricGraph,
    /// Present when the file has at least one `c` line.
    pub velocities: Option<VelocityProfile>,
}

struct Lines<'a> {
    source: &'a str,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(source: &'a str, text: &'a str) -> Self {
        Self {
            source,
            inner: text.lines().enumerate(),
        }
    }

    fn err(&self, line: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            source_name: self.source.to_string(),
            line,
            message: message.into(),
        }
    }
}

impl<'a> Iterator for Lines<'a> {
    /// `(line number, tokens)` for every nonblank line.
    type Item = (usize, Vec<&'a str>);

    fn next(&mut self) -> Option<Self::Item> {
        for (k, raw) in self.inner.by_ref() {
            let body = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = body.split_whitespace().collect();
            if !tokens.is_empty() {
                return Some((k + 1, tokens));
            }
        }
        None
    }
}

fn parse_id(lines: &Lines, line: usize, s: &str) -> Result<EdgeId> {
    s.parse::<i64>()
        .map(EdgeId)
        .map_err(|_| lines.err(line, format!("bad edge id `{s}`")))
}

fn expect_arity(lines: &Lines, line: usize, tokens: &[&str], n: usize) -> Result<()> {
    if tokens.len() == n {
        Ok(())
    } else {
        Err(lines.err(
            line,
            format!(
                "`{}` takes {} fields, found {}",
                tokens[0],
                n - 1,
                tokens.len() - 1
            ),
        ))
    }
}

pub fn parse_graph(source: &str, text: &str) -> Result<GraphFile> {
    let mut lines = Lines::new(source, text);
    let name = match lines.next() {
        Some((_, t)) if t[0] == "graph" && t.len() == 2 => t[1].to_string(),
        Some((n, _)) => return Err(lines.err(n, "expected `graph <name>`")),
        None => return Err(lines.err(0, "empty graph file")),
    };
    let mut edges: BTreeMap<EdgeId, Edge> = BTreeMap::new();
    let mut weights: Vec<(EdgeId, EdgeId, Rational)> = Vec::new();
    let mut seen_pairs: BTreeSet<(EdgeId, EdgeId)> = BTreeSet::new();
    let mut velocities: Vec<(EdgeId, Velocity)> = Vec::new();
    while let Some((n, t)) = lines.next() {
        match t[0] {
            "edge" => {
                expect_arity(&lines, n, &t, 4)?;
                let id = parse_id(&lines, n, t[1])?;
                if edges.contains_key(&id) {
                    return Err(lines.err(n, format!("duplicate edge id {id}")));
                }
                edges.insert(id, Edge::new(id.0, t[2], t[3]));
            }
            "w" => {
                expect_arity(&lines, n, &t, 4)?;
                let i = parse_id(&lines, n, t[1])?;
                let j = parse_id(&lines, n, t[2])?;
                let (Some(ei), Some(ej)) = (edges.get(&i), edges.get(&j)) else {
                    return Err(lines.err(n, "weight refers to an undeclared edge"));
                };
                if ei.tail != ej.head {
                    return Err(lines.err(
                        n,
                        format!(
                            "edges {j} and {i} are not adjacent: {j} ends at {}, {i} starts at {}",
                            ej.head.0, ei.tail.0
                        ),
                    ));
                }
                if !seen_pairs.insert((i, j)) {
                    return Err(lines.err(n, format!("weight w {i} {j} given twice")));
                }
                let w = parse_exact(t[3]).map_err(|e| lines.err(n, e.to_string()))?;
                weights.push((i, j, w));
            }
            "c" => {
                expect_arity(&lines, n, &t, 3)?;
                let id = parse_id(&lines, n, t[1])?;
                let v = parse_velocity(t[2]).map_err(|e| lines.err(n, e.to_string()))?;
                velocities.push((id, v));
            }
            other => return Err(lines.err(n, format!("unknown directive `{other}`"))),
        }
    }
    let graph = MetricGraph::finite(name, edges.into_values(), weights)
        .map_err(|e| lines.err(0, e.to_string()))?;
    let velocities = if velocities.is_empty() {
        None
    } else {
        let ids = graph.edge_ids().unwrap_or_default();
        if let Some((id, _)) = velocities.iter().find(|(id, _)| !ids.contains(id)) {
            return Err(lines.err(0, format!("velocity given for unknown edge {id}")));
        }
        Some(VelocityProfile::new(velocities).map_err(|e| lines.err(0, e.to_string()))?)
    };
    Ok(GraphFile { graph, velocities })
}

/// `p/q` and integers are exact; decimals are floating.
pub fn parse_velocity(s: &str) -> Result<Velocity> {
    match parse_exact(s) {
        Ok(r) => Ok(Velocity::Exact(r)),
        Err(Error::Precision(_)) => s
            .parse::<f64>()
            .map(Velocity::Real)
            .map_err(|_| Error::Argument(format!("bad velocity `{s}`"))),
        Err(e) => Err(e),
    }
}

pub fn write_graph(file: &GraphFile) -> Result<String> {
    let g = &file.graph;
    let (Some(edges), Some(weights)) = (g.edges(), g.weights()) else {
        return Err(Error::Unsupported(
            "only finite graphs can be written".into(),
        ));
    };
    let mut out = format!("graph {}\n", g.name());
    for e in edges {
        out.push_str(&format!("edge {} {} {}\n", e.id, e.tail.0, e.head.0));
    }
    for (i, j, w) in weights {
        out.push_str(&format!("w {i} {j} {w}\n"));
    }
    if let Some(v) = &file.velocities {
        for (e, c) in v.entries() {
            out.push_str(&format!("c {e} {c}\n"));
        }
    }
    Ok(out)
}

struct StateBlock {
    line: usize,
    name: String,
    breakpoints: Option<Vec<Rational>>,
    values: Vec<BTreeMap<EdgeId, Rational>>,
}

impl StateBlock {
    fn finish(self, lines: &Lines) -> Result<(String, NetworkState<Rational>)> {
        let bps = self.breakpoints.ok_or_else(|| {
            lines.err(self.line, format!("state `{}` has no `bp` line", self.name))
        })?;
        let values = self
            .values
            .into_iter()
            .map(SparseVector::from_entries)
            .collect();
        let state =
            NetworkState::new(bps, values).map_err(|e| lines.err(self.line, e.to_string()))?;
        Ok((self.name, state))
    }
}

/// All `state` blocks of a file, in order.
pub fn parse_states(source: &str, text: &str) -> Result<Vec<(String, NetworkState<Rational>)>> {
    let mut lines = Lines::new(source, text);
    let mut out = Vec::new();
    let mut current: Option<StateBlock> = None;

    while let Some((n, t)) = lines.next() {
        match t[0] {
            "state" => {
                expect_arity(&lines, n, &t, 2)?;
                if let Some(block) = current.take() {
                    out.push(block.finish(&lines)?);
                }
                current = Some(StateBlock {
                    line: n,
                    name: t[1].to_string(),
                    breakpoints: None,
                    values: Vec::new(),
                });
            }
            "bp" => {
                let Some(block) = current.as_mut() else {
                    return Err(lines.err(n, "`bp` before `state`"));
                };
                if block.breakpoints.is_some() {
                    return Err(lines.err(n, "second `bp` line in one state"));
                }
                let bps: Vec<Rational> = t[1..]
                    .iter()
                    .map(|s| parse_exact(s).map_err(|e| lines.err(n, e.to_string())))
                    .collect::<Result<_>>()?;
                if bps.len() < 2 {
                    return Err(lines.err(n, "`bp` needs at least two breakpoints"));
                }
                block.values = vec![BTreeMap::new(); bps.len() - 1];
                block.breakpoints = Some(bps);
            }
            "v" => {
                expect_arity(&lines, n, &t, 4)?;
                let Some(block) = current.as_mut() else {
                    return Err(lines.err(n, "`v` before `state`"));
                };
                if block.breakpoints.is_none() {
                    return Err(lines.err(n, "`v` before `bp`"));
                }
                let k: usize = t[1]
                    .parse()
                    .map_err(|_| lines.err(n, format!("bad piece index `{}`", t[1])))?;
                let pieces = block.values.len();
                let slot = block
                    .values
                    .get_mut(k)
                    .ok_or_else(|| lines.err(n, format!("piece {k} out of range 0..{pieces}")))?;
                let e = parse_id(&lines, n, t[2])?;
                let x =
                    parse_rational_or_decimal(t[3]).map_err(|err| lines.err(n, err.to_string()))?;
                if slot.insert(e, x).is_some() {
                    return Err(
                        lines.err(n, format!("value for piece {k} on edge {e} given twice"))
                    );
                }
            }
            other => return Err(lines.err(n, format!("unknown directive `{other}`"))),
        }
    }
    if let Some(block) = current.take() {
        out.push(block.finish(&lines)?);
    }
    if out.is_empty() {
        return Err(lines.err(0, "no `state` block"));
    }
    Ok(out)
}

/// The single state in a file.
pub fn parse_state(source: &str, text: &str) -> Result<NetworkState<Rational>> {
    let mut all = parse_states(source, text)?;
    if all.len() != 1 {
        return Err(Error::Parse {
            source_name: source.to_string(),
            line: 0,
            message: format!("expected one state block, found {}", all.len()),
        });
    }
    Ok(all.remove(0).1)
}

pub fn write_state(name: &str, f: &NetworkState<Rational>) -> String {
    let mut out = format!("state {name}\nbp");
    for b in f.breakpoints() {
        out.push_str(&format!(" {b}"));
    }
    out.push('\n');
    for (k, v) in f.values().iter().enumerate() {
        for (e, x) in v.iter() {
            out.push_str(&format!("v {k} {e} {x}\n"));
        }
    }
    out
}

/// Values that can be written as CSV cells.
pub trait CsvValue: Scalar {
    fn headers(edge: EdgeId) -> Vec<String>;
    fn cells(&self) -> Vec<f64>;
}

impl CsvValue for f64 {
    fn headers(edge: EdgeId) -> Vec<String> {
        vec![format!("edge_{edge}")]
    }

    fn cells(&self) -> Vec<f64> {
        vec![*self]
    }
}

impl CsvValue for Rational {
    fn headers(edge: EdgeId) -> Vec<String> {
        vec![format!("edge_{edge}")]
    }

    fn cells(&self) -> Vec<f64> {
        vec![rational_to_f64(self)]
    }
}

impl CsvValue for Complex64 {
    fn headers(edge: EdgeId) -> Vec<String> {
        vec![format!("edge_{edge}_re"), format!("edge_{edge}_im")]
    }

    fn cells(&self) -> Vec<f64> {
        vec![self.re, self.im]
    }
}

/// 17 significant digits, so every `f64` survives a round trip.
pub fn format_f64(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Rows `s, edge_<id>, ...` for samples on the uniform grid of `[0, 1]`.
/// An empty sample list gives the header alone.
pub fn write_csv_rows<S: CsvValue>(
    samples: &[SparseVector<S>],
    edges: &[EdgeId],
) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let mut header = vec!["s".to_string()];
    header.extend(edges.iter().flat_map(|e| S::headers(*e)));
    w.write_record(&header).map_err(csv_error)?;
    let m = samples.len().saturating_sub(1).max(1);
    for (k, v) in samples.iter().enumerate() {
        let mut row = vec![format_f64(k as f64 / m as f64)];
        for e in edges {
            row.extend(v.get(*e).cells().into_iter().map(format_f64));
        }
        w.write_record(&row).map_err(csv_error)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
}

pub fn write_csv<S: CsvValue>(state: &SampledState<S>, edges: &[EdgeId]) -> Result<String> {
    write_csv_rows(state.samples(), edges)
}

/// Parses a real-valued CSV written by [`write_csv`].
pub fn parse_csv(source: &str, text: &str) -> Result<(Vec<EdgeId>, Vec<SparseVector<f64>>)> {
    let err = |line: usize, message: String| Error::Parse {
        source_name: source.to_string(),
        line,
        message,
    };
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| err(1, e.to_string()))?.clone();
    if header.get(0) != Some("s") {
        return Err(err(1, "first column must be `s`".into()));
    }
    let edges: Vec<EdgeId> = header
        .iter()
        .skip(1)
        .map(|h| {
            h.strip_prefix("edge_")
                .and_then(|id| id.parse().ok())
                .map(EdgeId)
                .ok_or_else(|| err(1, format!("bad column `{h}`")))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| err(line, e.to_string()))?;
        let cells: Vec<f64> = rec
            .iter()
            .map(|c| {
                c.parse()
                    .map_err(|_| err(line, format!("bad number `{c}`")))
            })
            .collect::<Result<_>>()?;
        rows.push(SparseVector::from_entries(
            edges.iter().copied().zip(cells[1..].iter().copied()),
        ));
    }
    Ok((edges, rows))
}
