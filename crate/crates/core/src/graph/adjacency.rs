use super::{fetch_lazy_column, EdgeId, MetricGraph, SparseVector, Topology, VelocityProfile};
use crate::error::{Error, Result};
use crate::scalar::{rational_to_f64, Rational, Scalar};
use num_traits::{One, Zero};
use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, RwLock};

/// One operator entry: exact when weights and both velocities are rational.
#[derive(Clone, Debug, PartialEq)]
pub struct Coef {
    pub exact: Option<Rational>,
    pub approx: f64,
}

impl Coef {
    pub fn exact(r: Rational) -> Self {
        Self {
            approx: rational_to_f64(&r),
            exact: Some(r),
        }
    }

    pub fn approx(x: f64) -> Self {
        Self {
            exact: None,
            approx: x,
        }
    }
}

pub type Column = Arc<[(EdgeId, Coef)]>;

/// The line-graph operator `B`, or its conjugate `C^-1 B C` when built with a
/// velocity profile.
///
/// Column `j` lists `(i, (c_j / c_i) w_ij)`. Columns of finite graphs are
/// computed and checked up front; lazy columns are checked and cached on first
/// access.
#[derive(Clone)]
pub struct AdjacencyOperator {
    graph: MetricGraph,
    scaling: Option<VelocityProfile>,
    columns: Arc<ColumnStore>,
}

enum ColumnStore {
    Eager {
        columns: BTreeMap<EdgeId, Column>,
        csr: Csr,
    },
    Cached(RwLock<HashMap<EdgeId, Column>>),
}

/// Compressed columns over the sorted edge list of a finite graph.
struct Csr {
    ids: Vec<EdgeId>,
    col_ptr: Vec<usize>,
    rows: Vec<usize>,
    coefs: Vec<Coef>,
}

impl Csr {
    fn new(columns: &BTreeMap<EdgeId, Column>) -> Self {
        let ids: Vec<EdgeId> = columns.keys().copied().collect();
        let mut col_ptr = vec![0];
        let mut rows = Vec::new();
        let mut coefs = Vec::new();
        for col in columns.values() {
            for (i, c) in col.iter() {
                rows.push(ids.binary_search(i).expect("row edge belongs to the graph"));
                coefs.push(c.clone());
            }
            col_ptr.push(rows.len());
        }
        Self {
            ids,
            col_ptr,
            rows,
            coefs,
        }
    }
}

impl std::fmt::Debug for AdjacencyOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AdjacencyOperator")
            .field("graph", &self.graph)
            .field("scaled", &self.scaling.is_some())
            .finish()
    }
}

impl AdjacencyOperator {
    pub fn new(graph: &MetricGraph, scaling: Option<VelocityProfile>) -> Result<Self> {
        let columns = match graph.topology() {
            Topology::Finite(g) => {
                if let Some(vel) = &scaling {
                    let ids: Vec<EdgeId> = g.edges.keys().copied().collect();
                    vel.covers(&ids)?;
                }
                let mut columns = BTreeMap::new();
                for (j, raw) in &g.columns {
                    columns.insert(*j, build_column(*j, raw, scaling.as_ref())?);
                }
                let csr = Csr::new(&columns);
                ColumnStore::Eager { columns, csr }
            }
            Topology::Lazy(_) => ColumnStore::Cached(RwLock::new(HashMap::new())),
        };
        Ok(Self {
            graph: graph.clone(),
            scaling,
            columns: Arc::new(columns),
        })
    }

    pub fn unscaled(graph: &MetricGraph) -> Result<Self> {
        Self::new(graph, None)
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn scaling(&self) -> Option<&VelocityProfile> {
        self.scaling.as_ref()
    }

    pub fn is_scaled(&self) -> bool {
        self.scaling.is_some()
    }

    /// `true` when every coefficient is exact.
    pub fn is_exact(&self) -> bool {
        self.scaling.as_ref().is_none_or(VelocityProfile::is_exact)
    }

    pub fn column(&self, edge: EdgeId) -> Result<Column> {
        match self.columns.as_ref() {
            ColumnStore::Eager { columns, .. } => columns
                .get(&edge)
                .cloned()
                .ok_or_else(|| Error::MalformedGraph(format!("unknown edge {edge}"))),
            ColumnStore::Cached(cache) => {
                if let Some(col) = cache.read().expect("column cache poisoned").get(&edge) {
                    return Ok(col.clone());
                }
                let Topology::Lazy(t) = self.graph.topology() else {
                    unreachable!("cached store implies a lazy graph")
                };
                let raw = fetch_lazy_column(t.as_ref(), edge)?;
                let col = build_column(edge, &raw, self.scaling.as_ref())?;
                cache
                    .write()
                    .expect("column cache poisoned")
                    .entry(edge)
                    .or_insert(col.clone());
                Ok(col)
            }
        }
    }

    /// `w = op v`, summed column by column in increasing edge order.
    pub fn apply<S: Scalar>(&self, v: &SparseVector<S>) -> Result<SparseVector<S>> {
        let mut acc: BTreeMap<EdgeId, S> = BTreeMap::new();
        for (j, vj) in v.iter() {
            for (i, coef) in self.column(j)?.iter() {
                let term = S::from_coef(coef)? * vj.clone();
                let slot = acc.entry(*i).or_insert_with(S::zero);
                let cur = std::mem::replace(slot, S::zero());
                *slot = cur + term;
            }
        }
        Ok(SparseVector::from_entries(acc))
    }

    /// `op^n v`. On finite graphs the iteration runs over dense work vectors;
    /// the summation order matches [`AdjacencyOperator::apply`].
    pub fn apply_power<S: Scalar>(&self, v: &SparseVector<S>, n: u64) -> Result<SparseVector<S>> {
        let ColumnStore::Eager { csr, .. } = self.columns.as_ref() else {
            let mut cur = v.clone();
            for _ in 0..n {
                cur = self.apply(&cur)?;
            }
            return Ok(cur);
        };
        if n == 0 || v.is_empty() {
            return Ok(v.clone());
        }
        let coefs: Vec<S> = csr.coefs.iter().map(S::from_coef).collect::<Result<_>>()?;
        let len = csr.ids.len();
        let mut cur = vec![S::zero(); len];
        for (e, x) in v.iter() {
            let k = csr
                .ids
                .binary_search(&e)
                .map_err(|_| Error::MalformedGraph(format!("unknown edge {e}")))?;
            cur[k] = x.clone();
        }
        for _ in 0..n {
            let mut next = vec![S::zero(); len];
            for (j, vj) in cur.iter().enumerate() {
                if vj.is_zero() {
                    continue;
                }
                for p in csr.col_ptr[j]..csr.col_ptr[j + 1] {
                    let slot = &mut next[csr.rows[p]];
                    let acc = std::mem::replace(slot, S::zero());
                    *slot = acc + coefs[p].clone() * vj.clone();
                }
            }
            cur = next;
        }
        Ok(SparseVector::from_sorted_unchecked(
            csr.ids
                .iter()
                .zip(cur)
                .filter(|(_, x)| !x.is_zero())
                .map(|(e, x)| (*e, x))
                .collect(),
        ))
    }

    /// Rows of a finite operator: `rows[i]` lists `(j, op_ij)`.
    pub fn rows(&self) -> Result<BTreeMap<EdgeId, Vec<(EdgeId, Coef)>>> {
        let ColumnStore::Eager { columns: map, .. } = self.columns.as_ref() else {
            return Err(Error::Unsupported("row access needs a finite graph".into()));
        };
        let mut rows: BTreeMap<EdgeId, Vec<(EdgeId, Coef)>> =
            map.keys().map(|i| (*i, Vec::new())).collect();
        for (j, col) in map {
            for (i, c) in col.iter() {
                rows.entry(*i).or_default().push((*j, c.clone()));
            }
        }
        Ok(rows)
    }

    /// Dense matrix over the given edge order (finite graphs; tests and oracles).
    pub fn dense_f64(&self, order: &[EdgeId]) -> Result<Vec<Vec<f64>>> {
        let index: HashMap<EdgeId, usize> =
            order.iter().enumerate().map(|(k, e)| (*e, k)).collect();
        let mut m = vec![vec![0.0; order.len()]; order.len()];
        for (jj, j) in order.iter().enumerate() {
            for (i, c) in self.column(*j)?.iter() {
                let ii = *index
                    .get(i)
                    .ok_or_else(|| Error::Argument(format!("edge {i} missing from order")))?;
                m[ii][jj] = c.approx;
            }
        }
        Ok(m)
    }
}

fn build_column(
    j: EdgeId,
    raw: &[(EdgeId, Rational)],
    scaling: Option<&VelocityProfile>,
) -> Result<Column> {
    if raw.is_empty() {
        return Err(Error::MalformedGraph(format!(
            "edge {j} ends in a sink (empty column)"
        )));
    }
    let sum = raw.iter().fold(Rational::zero(), |acc, (_, w)| acc + w);
    if !sum.is_one() {
        return Err(Error::MalformedGraph(format!(
            "column {j} sums to {sum}, not 1"
        )));
    }
    let Some(vel) = scaling else {
        return Ok(raw
            .iter()
            .map(|(i, w)| (*i, Coef::exact(w.clone())))
            .collect());
    };
    let cj = vel.get(j)?;
    raw.iter()
        .map(|(i, w)| {
            let ci = vel.get(*i)?;
            let coef = match (cj.exact(), ci.exact()) {
                (Some(a), Some(b)) => Coef::exact(a / b * w),
                _ => Coef::approx(cj.to_f64() / ci.to_f64() * rational_to_f64(w)),
            };
            Ok((*i, coef))
        })
        .collect()
}
