//! Graph model, validation and the weighted line-graph adjacency operator.
//!
//! Edge `j` is parametrised over `[0, 1]` against its direction: `j(1)` is the
//! tail, `j(0)` the head. A weight `w_ij` is allowed only when edge `j` ends
//! where edge `i` starts, and column `j` of `B` lists every such pair.

mod adjacency;
mod sparse;
mod velocity;

pub use adjacency::{AdjacencyOperator, Coef};
pub use sparse::SparseVector;
pub use velocity::{Velocity, VelocityProfile};

use crate::error::{Error, Result};
use crate::scalar::Rational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

/// Longest column accepted from a lazy topology before it is deemed infinite.
pub const MAX_LAZY_COLUMN: usize = 1 << 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct EdgeId(pub i64);

impl fmt::Display for EdgeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct VertexId(pub String);

impl VertexId {
    pub fn new(name: impl Into<String>) -> Self {
        Self(name.into())
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub id: EdgeId,
    pub tail: VertexId,
    pub head: VertexId,
}

impl Edge {
    pub fn new(id: i64, tail: impl Into<String>, head: impl Into<String>) -> Self {
        Self {
            id: EdgeId(id),
            tail: VertexId::new(tail),
            head: VertexId::new(head),
        }
    }
}

/// On-demand description of a (possibly infinite) graph.
///
/// `column(j)` enumerates the pairs `(i, w_ij)` in increasing order of `i`;
/// `endpoints(j)` returns `(tail, head)`, or `None` for an unknown edge.
pub trait LazyTopology: Send + Sync {
    fn endpoints(&self, edge: EdgeId) -> Option<(VertexId, VertexId)>;
    fn column(&self, edge: EdgeId) -> Box<dyn Iterator<Item = (EdgeId, Rational)> + '_>;
}

/// Adapter turning two closures into a [`LazyTopology`].
pub struct FnTopology<C, P> {
    column: C,
    endpoints: P,
}

impl<C, P, I> LazyTopology for FnTopology<C, P>
where
    C: Fn(EdgeId) -> I + Send + Sync,
    I: Iterator<Item = (EdgeId, Rational)> + 'static,
    P: Fn(EdgeId) -> Option<(VertexId, VertexId)> + Send + Sync,
{
    fn endpoints(&self, edge: EdgeId) -> Option<(VertexId, VertexId)> {
        (self.endpoints)(edge)
    }

    fn column(&self, edge: EdgeId) -> Box<dyn Iterator<Item = (EdgeId, Rational)> + '_> {
        Box::new((self.column)(edge))
    }
}

#[derive(Clone, Debug)]
pub(crate) struct FiniteGraph {
    pub(crate) edges: BTreeMap<EdgeId, (VertexId, VertexId)>,
    pub(crate) columns: BTreeMap<EdgeId, Vec<(EdgeId, Rational)>>,
}

#[derive(Clone)]
pub(crate) enum Topology {
    Finite(Arc<FiniteGraph>),
    Lazy(Arc<dyn LazyTopology>),
}

/// Directed weighted metric graph, finite or lazily generated.
///
/// Cloning is cheap; the topology is shared.
#[derive(Clone)]
pub struct MetricGraph {
    name: String,
    topology: Topology,
}

impl fmt::Debug for MetricGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.topology {
            Topology::Finite(g) => f
                .debug_struct("MetricGraph")
                .field("name", &self.name)
                .field("edges", &g.edges.len())
                .finish(),
            Topology::Lazy(_) => f
                .debug_struct("MetricGraph")
                .field("name", &self.name)
                .field("edges", &"lazy")
                .finish(),
        }
    }
}

impl MetricGraph {
    /// Builds a finite graph.
    ///
    /// Rejects duplicate edge ids, weights on unknown edges, repeated weight
    /// pairs, weights outside `[0, 1]` and weights between non-adjacent edges.
    /// Loops, parallel edges, sinks and column sums are reported by
    /// [`MetricGraph::validate`] instead.
    pub fn finite(
        name: impl Into<String>,
        edges: impl IntoIterator<Item = Edge>,
        weights: impl IntoIterator<Item = (EdgeId, EdgeId, Rational)>,
    ) -> Result<Self> {
        let mut edge_map = BTreeMap::new();
        for e in edges {
            if edge_map.insert(e.id, (e.tail, e.head)).is_some() {
                return Err(Error::MalformedGraph(format!("duplicate edge id {}", e.id)));
            }
        }
        let mut columns: BTreeMap<EdgeId, Vec<(EdgeId, Rational)>> =
            edge_map.keys().map(|j| (*j, Vec::new())).collect();
        let mut seen = BTreeSet::new();
        for (i, j, w) in weights {
            let (ti, _) = edge_map.get(&i).ok_or_else(|| {
                Error::MalformedGraph(format!("weight references unknown edge {i}"))
            })?;
            let (_, hj) = edge_map.get(&j).ok_or_else(|| {
                Error::MalformedGraph(format!("weight references unknown edge {j}"))
            })?;
            if ti != hj {
                return Err(Error::MalformedGraph(format!(
                    "weight w({i},{j}) between non-adjacent edges: head of {j} is {hj}, tail of {i} is {ti}"
                )));
            }
            if w.is_negative() || w > Rational::one() {
                return Err(Error::MalformedGraph(format!(
                    "weight w({i},{j}) = {w} outside [0, 1]"
                )));
            }
            if !seen.insert((i, j)) {
                return Err(Error::MalformedGraph(format!(
                    "weight w({i},{j}) given twice"
                )));
            }
            if !w.is_zero() {
                columns.get_mut(&j).expect("edge checked").push((i, w));
            }
        }
        for col in columns.values_mut() {
            col.sort_by_key(|(i, _)| *i);
        }
        Ok(Self {
            name: name.into(),
            topology: Topology::Finite(Arc::new(FiniteGraph {
                edges: edge_map,
                columns,
            })),
        })
    }

    pub fn lazy(name: impl Into<String>, topology: Arc<dyn LazyTopology>) -> Self {
        Self {
            name: name.into(),
            topology: Topology::Lazy(topology),
        }
    }

    /// Lazy graph from an incoming-column callback and an endpoint callback.
    pub fn from_fns<C, P, I>(name: impl Into<String>, column: C, endpoints: P) -> Self
    where
        C: Fn(EdgeId) -> I + Send + Sync + 'static,
        I: Iterator<Item = (EdgeId, Rational)> + 'static,
        P: Fn(EdgeId) -> Option<(VertexId, VertexId)> + Send + Sync + 'static,
    {
        Self::lazy(name, Arc::new(FnTopology { column, endpoints }))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.topology, Topology::Finite(_))
    }

    pub(crate) fn topology(&self) -> &Topology {
        &self.topology
    }

    /// Edge ids of a finite graph in increasing order; `None` for lazy graphs.
    pub fn edge_ids(&self) -> Option<Vec<EdgeId>> {
        match &self.topology {
            Topology::Finite(g) => Some(g.edges.keys().copied().collect()),
            Topology::Lazy(_) => None,
        }
    }

    pub fn edge_count(&self) -> Option<usize> {
        match &self.topology {
            Topology::Finite(g) => Some(g.edges.len()),
            Topology::Lazy(_) => None,
        }
    }

    pub fn endpoints(&self, edge: EdgeId) -> Option<(VertexId, VertexId)> {
        match &self.topology {
            Topology::Finite(g) => g.edges.get(&edge).cloned(),
            Topology::Lazy(t) => t.endpoints(edge),
        }
    }

    /// Stored weights of column `j`, i.e. the pairs `(i, w_ij)`, checked for
    /// finiteness, order and adjacency.
    pub fn column(&self, edge: EdgeId) -> Result<Vec<(EdgeId, Rational)>> {
        match &self.topology {
            Topology::Finite(g) => g
                .columns
                .get(&edge)
                .cloned()
                .ok_or_else(|| Error::MalformedGraph(format!("unknown edge {edge}"))),
            Topology::Lazy(t) => fetch_lazy_column(t.as_ref(), edge),
        }
    }

    /// Edges of a finite graph with their endpoints.
    pub fn edges(&self) -> Option<Vec<Edge>> {
        match &self.topology {
            Topology::Finite(g) => Some(
                g.edges
                    .iter()
                    .map(|(id, (t, h))| Edge {
                        id: *id,
                        tail: t.clone(),
                        head: h.clone(),
                    })
                    .collect(),
            ),
            Topology::Lazy(_) => None,
        }
    }

    /// All stored weights `(i, j, w_ij)` of a finite graph.
    pub fn weights(&self) -> Option<Vec<(EdgeId, EdgeId, Rational)>> {
        match &self.topology {
            Topology::Finite(g) => Some(
                g.columns
                    .iter()
                    .flat_map(|(j, col)| col.iter().map(move |(i, w)| (*i, *j, w.clone())))
                    .collect(),
            ),
            Topology::Lazy(_) => None,
        }
    }

    /// Checks column stochasticity on `probe` (all edges when `None`, finite
    /// graphs only) and reports loops, parallel edges and sinks.
    pub fn validate(&self, probe: Option<&[EdgeId]>) -> Result<ValidationReport> {
        match &self.topology {
            Topology::Finite(g) => {
                let probe: Vec<EdgeId> = match probe {
                    Some(p) => p.to_vec(),
                    None => g.edges.keys().copied().collect(),
                };
                let mut columns = Vec::with_capacity(probe.len());
                for j in probe {
                    let col = g
                        .columns
                        .get(&j)
                        .ok_or_else(|| Error::MalformedGraph(format!("unknown edge {j}")))?;
                    columns.push(ColumnCheck::new(j, col));
                }
                let loops = g
                    .edges
                    .iter()
                    .filter(|(_, (t, h))| t == h)
                    .map(|(id, _)| *id)
                    .collect();
                let mut by_pair: HashMap<(&VertexId, &VertexId), EdgeId> = HashMap::new();
                let mut duplicate_edges = Vec::new();
                for (id, (t, h)) in &g.edges {
                    if let Some(first) = by_pair.insert((t, h), *id) {
                        duplicate_edges.push((first, *id));
                    }
                }
                let tails: BTreeSet<&VertexId> = g.edges.values().map(|(t, _)| t).collect();
                let sinks: BTreeSet<VertexId> = g
                    .edges
                    .values()
                    .filter(|(_, h)| !tails.contains(h))
                    .map(|(_, h)| h.clone())
                    .collect();
                Ok(ValidationReport {
                    columns,
                    loops,
                    duplicate_edges,
                    sinks: sinks.into_iter().collect(),
                })
            }
            Topology::Lazy(t) => {
                let probe = probe.ok_or_else(|| {
                    Error::Argument("a lazy graph needs an explicit probe set".into())
                })?;
                let mut report = ValidationReport::default();
                let mut sinks = BTreeSet::new();
                for &j in probe {
                    let (tail, head) = t
                        .endpoints(j)
                        .ok_or_else(|| Error::MalformedGraph(format!("unknown edge {j}")))?;
                    if tail == head {
                        report.loops.push(j);
                    }
                    let col = fetch_lazy_column(t.as_ref(), j)?;
                    if col.is_empty() {
                        sinks.insert(head);
                    }
                    report.columns.push(ColumnCheck::new(j, &col));
                }
                report.sinks = sinks.into_iter().collect();
                Ok(report)
            }
        }
    }
}

pub(crate) fn fetch_lazy_column(
    topology: &dyn LazyTopology,
    edge: EdgeId,
) -> Result<Vec<(EdgeId, Rational)>> {
    let (_, head) = topology
        .endpoints(edge)
        .ok_or_else(|| Error::MalformedGraph(format!("unknown edge {edge}")))?;
    let col: Vec<(EdgeId, Rational)> = topology.column(edge).take(MAX_LAZY_COLUMN + 1).collect();
    if col.len() > MAX_LAZY_COLUMN {
        return Err(Error::MalformedGraph(format!(
            "column {edge} is not finite (more than {MAX_LAZY_COLUMN} entries)"
        )));
    }
    if col.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::MalformedGraph(format!(
            "column {edge} is not strictly sorted by edge id"
        )));
    }
    for (i, w) in &col {
        let (tail_i, _) = topology.endpoints(*i).ok_or_else(|| {
            Error::MalformedGraph(format!("column {edge} names unknown edge {i}"))
        })?;
        if tail_i != head {
            return Err(Error::MalformedGraph(format!(
                "weight w({i},{edge}) between non-adjacent edges"
            )));
        }
        if w.is_negative() || *w > Rational::one() {
            return Err(Error::MalformedGraph(format!(
                "weight w({i},{edge}) = {w} outside [0, 1]"
            )));
        }
    }
    Ok(col.into_iter().filter(|(_, w)| !w.is_zero()).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ColumnCheck {
    pub edge: EdgeId,
    #[serde(serialize_with = "serialize_rational")]
    pub sum: Rational,
    pub pass: bool,
}

impl ColumnCheck {
    fn new(edge: EdgeId, col: &[(EdgeId, Rational)]) -> Self {
        let sum = col.iter().fold(Rational::zero(), |acc, (_, w)| acc + w);
        let pass = sum.is_one();
        Self { edge, sum, pass }
    }
}

fn serialize_rational<S: serde::Serializer>(
    r: &Rational,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

/// Outcome of [`MetricGraph::validate`].
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub columns: Vec<ColumnCheck>,
    pub loops: Vec<EdgeId>,
    pub duplicate_edges: Vec<(EdgeId, EdgeId)>,
    pub sinks: Vec<VertexId>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.columns.iter().all(|c| c.pass)
            && self.loops.is_empty()
            && self.duplicate_edges.is_empty()
            && self.sinks.is_empty()
    }

    pub fn summary(&self) -> String {
        let failing: Vec<String> = self
            .columns
            .iter()
            .filter(|c| !c.pass)
            .map(|c| format!("column {} sums to {}", c.edge, c.sum))
            .collect();
        let mut parts = vec![if failing.is_empty() {
            format!("{} columns, all sum 1", self.columns.len())
        } else {
            format!("{} columns, {}", self.columns.len(), failing.join(", "))
        }];
        if !self.loops.is_empty() {
            parts.push(format!(
                "loops on edges {:?}",
                self.loops.iter().map(|e| e.0).collect::<Vec<_>>()
            ));
        }
        if !self.duplicate_edges.is_empty() {
            parts.push(format!(
                "parallel edges {:?}",
                self.duplicate_edges
                    .iter()
                    .map(|(a, b)| (a.0, b.0))
                    .collect::<Vec<_>>()
            ));
        }
        if !self.sinks.is_empty() {
            parts.push(format!(
                "sinks at {}",
                self.sinks
                    .iter()
                    .map(|v| v.0.as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            ));
        }
        parts.join("; ")
    }
}
