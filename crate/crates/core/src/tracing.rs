//! Backward characteristic tracing for arbitrary positive velocities.
//!
//! The value on edge `i` at `(s, t)` is read off the initial state if the
//! characteristic through `s` stays on the edge (`s + c_i t < 1`); otherwise it
//! entered through the tail at time `t - (1 - s) / c_i` and is the `B^C`
//! combination of the values leaving the heads of the feeding edges.
//! Finite graphs only, in `f64`.

use crate::error::{Error, Result};
use crate::graph::{AdjacencyOperator, EdgeId, MetricGraph, SparseVector, VelocityProfile};
use crate::scalar::rational_to_f64;
use crate::state::{NetworkState, SampledState, TestFunction};
use std::collections::{BTreeMap, BTreeSet};

/// Largest number of discontinuity fronts followed by [`Tracer::trace_state`].
pub const MAX_FRONTS: usize = 1 << 20;

/// Width below which two floating breakpoints are treated as one.
pub const SLIVER: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct Tracer {
    rows: BTreeMap<EdgeId, Vec<(EdgeId, f64)>>,
    columns: BTreeMap<EdgeId, Vec<EdgeId>>,
    speed: BTreeMap<EdgeId, f64>,
}

impl Tracer {
    pub fn new(g: &MetricGraph, vel: &VelocityProfile) -> Result<Self> {
        let op = AdjacencyOperator::new(g, Some(vel.clone()))?;
        let ids = g
            .edge_ids()
            .ok_or_else(|| Error::Unsupported("tracing needs a finite graph".into()))?;
        let rows = op
            .rows()?
            .into_iter()
            .map(|(i, r)| (i, r.into_iter().map(|(j, c)| (j, c.approx)).collect()))
            .collect();
        let mut columns = BTreeMap::new();
        let mut speed = BTreeMap::new();
        for j in &ids {
            columns.insert(*j, op.column(*j)?.iter().map(|(i, _)| *i).collect());
            speed.insert(*j, vel.get_f64(*j)?);
        }
        Ok(Self {
            rows,
            columns,
            speed,
        })
    }

    fn speed(&self, edge: EdgeId) -> Result<f64> {
        self.speed
            .get(&edge)
            .copied()
            .ok_or_else(|| Error::Argument(format!("edge {edge} is not in the graph")))
    }

    /// Value on `edge` at parameter `s` and time `t`.
    pub fn value(&self, f: &NetworkState<f64>, edge: EdgeId, s: f64, t: f64) -> Result<f64> {
        let c = self.speed(edge)?;
        let x = s + c * t;
        if x < 1.0 {
            return Ok(f.eval_f64(x).get(edge));
        }
        let entered = t - (1.0 - s) / c;
        let mut acc = 0.0;
        for (k, w) in &self.rows[&edge] {
            acc += w * self.value(f, *k, 0.0, entered)?;
        }
        Ok(acc)
    }

    /// Values on every edge at `s`.
    pub fn point(&self, f: &NetworkState<f64>, s: f64, t: f64) -> Result<SparseVector<f64>> {
        let mut entries = Vec::with_capacity(self.speed.len());
        for e in self.speed.keys() {
            entries.push((*e, self.value(f, *e, s, t)?));
        }
        Ok(SparseVector::from_entries(entries))
    }

    /// The solution at time `t` as a per-edge step function.
    ///
    /// Discontinuities of the initial state (and the edge ends) are followed
    /// forward as fronts; a front reaching a head spawns fronts at the tails
    /// of all edges it feeds.
    pub fn trace_state(&self, f: &NetworkState<f64>, t: f64) -> Result<TracedState> {
        let mut cuts: BTreeMap<EdgeId, Vec<f64>> =
            self.speed.keys().map(|e| (*e, vec![0.0, 1.0])).collect();
        let mut stack: Vec<(EdgeId, f64, f64)> = Vec::new();
        for e in self.speed.keys() {
            for b in f.breakpoints_f64() {
                stack.push((*e, *b, 0.0));
            }
        }
        let mut spawned: BTreeSet<(EdgeId, u64)> = BTreeSet::new();
        let mut followed = 0usize;
        while let Some((e, pos, start)) = stack.pop() {
            followed += 1;
            if followed > MAX_FRONTS {
                return Err(Error::Unsupported(format!(
                    "more than {MAX_FRONTS} fronts; reduce t"
                )));
            }
            let c = self.speed[&e];
            let arrival = start + pos / c;
            if arrival > t {
                cuts.get_mut(&e)
                    .expect("known edge")
                    .push(pos - c * (t - start));
                continue;
            }
            for i in &self.columns[&e] {
                // Fronts that coincide up to rounding are followed once.
                let key = (arrival * 1e12).round() as u64;
                if spawned.insert((*i, key)) {
                    stack.push((*i, 1.0, arrival));
                }
            }
        }
        let mut edges = BTreeMap::new();
        for (e, mut pts) in cuts {
            pts.sort_by(f64::total_cmp);
            pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-14);
            let mut starts: Vec<f64> = Vec::new();
            let mut vals: Vec<f64> = Vec::new();
            for w in pts.windows(2) {
                let v = self.value(f, e, 0.5 * (w[0] + w[1]), t)?;
                if vals.last() != Some(&v) {
                    starts.push(w[0]);
                    vals.push(v);
                }
            }
            starts.push(1.0);
            edges.insert(
                e,
                EdgeProfile {
                    breakpoints: starts,
                    values: vals,
                },
            );
        }
        Ok(TracedState { edges })
    }
}

/// Step function on one edge with `f64` breakpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeProfile {
    pub breakpoints: Vec<f64>,
    pub values: Vec<f64>,
}

impl EdgeProfile {
    pub fn eval(&self, s: f64) -> f64 {
        let k = self.breakpoints.partition_point(|b| *b <= s);
        self.values[k.saturating_sub(1).min(self.values.len() - 1)]
    }
}

/// Output of [`Tracer::trace_state`].
#[derive(Clone, Debug, PartialEq)]
pub struct TracedState {
    edges: BTreeMap<EdgeId, EdgeProfile>,
}

impl TracedState {
    pub fn edge(&self, e: EdgeId) -> Option<&EdgeProfile> {
        self.edges.get(&e)
    }

    pub fn eval(&self, s: f64) -> SparseVector<f64> {
        SparseVector::from_entries(self.edges.iter().map(|(e, p)| (*e, p.eval(s))))
    }

    pub fn sample(&self, m: usize) -> Result<SampledState<f64>> {
        SampledState::new((0..=m).map(|k| self.eval(k as f64 / m as f64)).collect())
    }

    /// `int_0^1 sum_j h_j g_j` over the merged grids.
    pub fn pair(&self, g: &TestFunction<f64>) -> f64 {
        let gs = g.state();
        let mut total = 0.0;
        for (e, p) in &self.edges {
            let mut grid: Vec<f64> = p.breakpoints.clone();
            grid.extend_from_slice(gs.breakpoints_f64());
            grid.sort_by(f64::total_cmp);
            grid.dedup();
            for w in grid.windows(2) {
                let mid = 0.5 * (w[0] + w[1]);
                total += (w[1] - w[0]) * p.eval(mid) * gs.eval_f64(mid).get(*e);
            }
        }
        total
    }

    /// `ess sup_s ||h(s) - f(s)||_1` for a step state `f`. Cells narrower
    /// than [`SLIVER`] come from rounded breakpoints and are skipped.
    pub fn sup_distance(&self, f: &NetworkState<f64>) -> f64 {
        let mut grid: Vec<f64> = f.breakpoints_f64().to_vec();
        for p in self.edges.values() {
            grid.extend_from_slice(&p.breakpoints);
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let mut sup = 0.0f64;
        for w in grid.windows(2) {
            if w[1] - w[0] <= SLIVER {
                continue;
            }
            let mid = 0.5 * (w[0] + w[1]);
            let fv = f.eval_f64(mid);
            let mut d = 0.0;
            for (e, p) in &self.edges {
                d += (p.eval(mid) - fv.get(*e)).abs();
            }
            for (e, x) in fv.iter() {
                if !self.edges.contains_key(&e) {
                    d += x.abs();
                }
            }
            sup = sup.max(d);
        }
        sup
    }

    pub fn total_mass(&self) -> f64 {
        self.edges
            .values()
            .map(|p| {
                p.breakpoints
                    .windows(2)
                    .zip(&p.values)
                    .map(|(w, v)| (w[1] - w[0]) * v)
                    .sum::<f64>()
            })
            .sum()
    }
}

/// Exact step state as a traced state, for comparisons on a common footing.
pub fn traced_from_state(f: &NetworkState<f64>, edges: &[EdgeId]) -> TracedState {
    let bps: Vec<f64> = f.breakpoints().iter().map(rational_to_f64).collect();
    TracedState {
        edges: edges
            .iter()
            .map(|e| {
                (
                    *e,
                    EdgeProfile {
                        breakpoints: bps.clone(),
                        values: f.values().iter().map(|v| v.get(*e)).collect(),
                    },
                )
            })
            .collect(),
    }
}
