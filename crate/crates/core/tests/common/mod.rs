//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use netflow_core::scalar::rational_to_f64;
use netflow_core::{EdgeId, MetricGraph, NetworkState, Rational, SparseVector, TestFunction};
use std::collections::BTreeMap;

/// Scaled coupling rows `i -> [(k, (c_k / c_i) w_ik)]` read off the weight table.
fn scaled_rows(
    g: &MetricGraph,
    speed: &BTreeMap<EdgeId, Rational>,
) -> BTreeMap<EdgeId, Vec<(EdgeId, Rational)>> {
    let mut rows: BTreeMap<EdgeId, Vec<(EdgeId, Rational)>> =
        speed.keys().map(|e| (*e, Vec::new())).collect();
    for (i, k, w) in g.weights().expect("finite graph") {
        let coef = w * &speed[&k] / &speed[&i];
        rows.get_mut(&i).expect("known edge").push((k, coef));
    }
    rows
}

/// Backward characteristic tracing in exact arithmetic.
pub struct ExactTracer {
    rows: BTreeMap<EdgeId, Vec<(EdgeId, Rational)>>,
    speed: BTreeMap<EdgeId, Rational>,
}

impl ExactTracer {
    pub fn new(g: &MetricGraph, speed: &[(i64, Rational)]) -> Self {
        let speed: BTreeMap<EdgeId, Rational> =
            speed.iter().map(|(e, c)| (EdgeId(*e), c.clone())).collect();
        Self {
            rows: scaled_rows(g, &speed),
            speed,
        }
    }

    pub fn unit(g: &MetricGraph) -> Self {
        let speed: Vec<(i64, Rational)> = g
            .edge_ids()
            .expect("finite graph")
            .into_iter()
            .map(|e| (e.0, Rational::from_integer(1.into())))
            .collect();
        Self::new(g, &speed)
    }

    pub fn edges(&self) -> Vec<EdgeId> {
        self.speed.keys().copied().collect()
    }

    /// Right limit in `s` of the solution on `edge` at time `t`.
    pub fn value(
        &self,
        f: &NetworkState<Rational>,
        edge: EdgeId,
        s: &Rational,
        t: &Rational,
    ) -> Rational {
        let c = &self.speed[&edge];
        let one = Rational::from_integer(1.into());
        let x = s + c * t;
        if x < one {
            return f.eval(&x).get(edge);
        }
        let entered = t - (&one - s) / c;
        let zero = Rational::from_integer(0.into());
        self.rows[&edge]
            .iter()
            .map(|(k, w)| w * self.value(f, *k, &zero, &entered))
            .fold(zero.clone(), |acc, v| acc + v)
    }

    pub fn point(
        &self,
        f: &NetworkState<Rational>,
        s: &Rational,
        t: &Rational,
    ) -> SparseVector<Rational> {
        SparseVector::from_entries(self.speed.keys().map(|e| (*e, self.value(f, *e, s, t))))
    }
}

/// `B^n v` with a dense matrix built from the weight table.
pub fn dense_power(g: &MetricGraph, v: &[f64], n: u32) -> Vec<f64> {
    let ids = g.edge_ids().expect("finite graph");
    let index: BTreeMap<EdgeId, usize> = ids.iter().enumerate().map(|(k, e)| (*e, k)).collect();
    let mut b = vec![vec![0.0; ids.len()]; ids.len()];
    for (i, j, w) in g.weights().expect("finite graph") {
        b[index[&i]][index[&j]] += rational_to_f64(&w);
    }
    let mut out = v.to_vec();
    for _ in 0..n {
        out = b
            .iter()
            .map(|row| row.iter().zip(&out).map(|(a, x)| a * x).sum())
            .collect();
    }
    out
}

/// Upwind finite volumes for transport with absorption on a finite graph.
///
/// Cell `k` of an edge covers `[k h, (k + 1) h)`. Each step moves material
/// one cell toward the head (CFL 1 at the fastest edge), feeds the tails from
/// the head cells through the scaled coupling and then applies `e^{q dt}`.
pub struct UpwindSolver {
    cells: usize,
    order: Vec<EdgeId>,
    speed: Vec<f64>,
    inflow: Vec<Vec<(usize, f64)>>,
}

impl UpwindSolver {
    pub fn new(g: &MetricGraph, speed: &[(i64, f64)], cells: usize) -> Self {
        let order = g.edge_ids().expect("finite graph");
        let index: BTreeMap<EdgeId, usize> =
            order.iter().enumerate().map(|(k, e)| (*e, k)).collect();
        let by_edge: BTreeMap<EdgeId, f64> = speed.iter().map(|(e, c)| (EdgeId(*e), *c)).collect();
        let speed: Vec<f64> = order.iter().map(|e| by_edge[e]).collect();
        let mut inflow = vec![Vec::new(); order.len()];
        for (i, k, w) in g.weights().expect("finite graph") {
            let (ii, kk) = (index[&i], index[&k]);
            inflow[ii].push((kk, rational_to_f64(&w) * speed[kk] / speed[ii]));
        }
        Self {
            cells,
            order,
            speed,
            inflow,
        }
    }

    fn cell_average(&self, f: &NetworkState<f64>, edge: EdgeId, k: usize) -> f64 {
        let n = self.cells as f64;
        f.eval_f64((k as f64 + 0.5) / n).get(edge)
    }

    /// Cell values at time `t`; `rate(edge, s)` is the absorption rate.
    pub fn run(
        &self,
        f: &NetworkState<f64>,
        rate: impl Fn(EdgeId, f64) -> f64,
        t: f64,
    ) -> Vec<Vec<f64>> {
        let n = self.cells;
        let h = 1.0 / n as f64;
        let c_max = self.speed.iter().cloned().fold(0.0, f64::max);
        let dt = h / c_max;
        let steps = (t / dt).round() as usize;
        let mut u: Vec<Vec<f64>> = self
            .order
            .iter()
            .map(|e| (0..n).map(|k| self.cell_average(f, *e, k)).collect())
            .collect();
        let damping: Vec<Vec<f64>> = self
            .order
            .iter()
            .map(|e| {
                (0..n)
                    .map(|k| (rate(*e, (k as f64 + 0.5) * h) * dt).exp())
                    .collect()
            })
            .collect();
        for _ in 0..steps {
            let heads: Vec<f64> = u.iter().map(|cells| cells[0]).collect();
            for (e, cells) in u.iter_mut().enumerate() {
                let nu = self.speed[e] * dt / h;
                let incoming: f64 = self.inflow[e].iter().map(|(k, w)| w * heads[*k]).sum();
                for k in 0..n {
                    let upstream = if k + 1 < n { cells[k + 1] } else { incoming };
                    cells[k] += nu * (upstream - cells[k]);
                }
                for (x, d) in cells.iter_mut().zip(&damping[e]) {
                    *x *= d;
                }
            }
        }
        u
    }

    /// Value of the cell containing `s = m / grid`, per edge.
    pub fn sample(&self, u: &[Vec<f64>], m: usize, grid: usize) -> SparseVector<f64> {
        let k = (m * self.cells / grid).min(self.cells - 1);
        SparseVector::from_entries(self.order.iter().zip(u).map(|(e, cells)| (*e, cells[k])))
    }
}

/// Midpoint Riemann sum of `<f, g>` with `n` points.
pub fn riemann_pair(f: &NetworkState<f64>, g: &TestFunction<f64>, n: usize) -> f64 {
    (0..n)
        .map(|k| {
            let s = (k as f64 + 0.5) / n as f64;
            f.eval_f64(s).dot(g.state().eval_f64(s))
        })
        .sum::<f64>()
        / n as f64
}

/// Max over `n + 1` equispaced points of the pointwise l1 norm.
pub fn sampled_sup(f: &NetworkState<f64>, n: usize) -> f64 {
    (0..=n)
        .map(|k| f.eval_f64(k as f64 / n as f64).l1_norm())
        .fold(0.0, f64::max)
}

pub fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}
