//! Random graphs, states and times for property checks.

use crate::graph::{Edge, EdgeId, MetricGraph, SparseVector, Velocity, VelocityProfile};
use crate::scalar::{ratio, Rational};
use crate::state::NetworkState;
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::BTreeSet;

/// Size limits for generated instances.
#[derive(Clone, Copy, Debug)]
pub struct RandomLimits {
    pub max_vertices: usize,
    pub max_edges: usize,
    pub max_pieces: usize,
    /// Breakpoint denominators are drawn from `1..=max_denominator`.
    pub max_denominator: i64,
}

impl Default for RandomLimits {
    fn default() -> Self {
        Self {
            max_vertices: 5,
            max_edges: 12,
            max_pieces: 8,
            max_denominator: 12,
        }
    }
}

/// `p/q` with `q` in `1..=max_den` and `p / q` in `[lo, hi]`.
pub fn rational_in<R: Rng + ?Sized>(rng: &mut R, lo: i64, hi: i64, max_den: i64) -> Rational {
    let q = rng.gen_range(1..=max_den);
    let p = rng.gen_range(lo * q..=hi * q);
    ratio(p, q)
}

/// A simple digraph (no loops, no parallel edges) where every vertex has an
/// outgoing edge, with random rational column-stochastic weights.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, limits: &RandomLimits) -> MetricGraph {
    let n = rng.gen_range(2..=limits.max_vertices.max(2));
    let m = rng.gen_range(n..=limits.max_edges.max(n).min(n * (n - 1)));
    let vertex = |k: usize| format!("v{k}");
    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut order = Vec::with_capacity(m);
    for tail in 0..n {
        let head = (tail + rng.gen_range(1..n)) % n;
        pairs.insert((tail, head));
        order.push((tail, head));
    }
    while order.len() < m {
        let tail = rng.gen_range(0..n);
        let head = (tail + rng.gen_range(1..n)) % n;
        if pairs.insert((tail, head)) {
            order.push((tail, head));
        }
    }
    let edges: Vec<Edge> = order
        .iter()
        .enumerate()
        .map(|(k, (t, h))| Edge::new(k as i64 + 1, vertex(*t), vertex(*h)))
        .collect();
    let mut weights = Vec::new();
    for j in &edges {
        let mut succ: Vec<EdgeId> = edges
            .iter()
            .filter(|i| i.tail == j.head)
            .map(|i| i.id)
            .collect();
        succ.shuffle(rng);
        succ.truncate(rng.gen_range(1..=succ.len()));
        let raw: Vec<i64> = succ.iter().map(|_| rng.gen_range(1..=5)).collect();
        let total: i64 = raw.iter().sum();
        for (i, w) in succ.into_iter().zip(raw) {
            weights.push((i, j.id, ratio(w, total)));
        }
    }
    MetricGraph::finite("random", edges, weights).expect("generated graph is well formed")
}

/// A state with at most `max_pieces` pieces supported on some of `edges`.
pub fn random_state<R: Rng + ?Sized>(
    rng: &mut R,
    edges: &[EdgeId],
    limits: &RandomLimits,
) -> NetworkState<Rational> {
    let pieces = rng.gen_range(1..=limits.max_pieces);
    let mut inner: BTreeSet<Rational> = BTreeSet::new();
    for _ in 0..pieces - 1 {
        let q = rng.gen_range(2..=limits.max_denominator);
        inner.insert(ratio(rng.gen_range(1..q), q));
    }
    let mut bps = vec![ratio(0, 1)];
    bps.extend(inner);
    bps.push(ratio(1, 1));
    let mut values = Vec::with_capacity(bps.len() - 1);
    for _ in 1..bps.len() {
        let mut entries = Vec::new();
        for e in edges {
            if rng.gen_bool(0.6) {
                entries.push((*e, rational_in(rng, -3, 3, 6)));
            }
        }
        values.push(SparseVector::from_entries(entries));
    }
    NetworkState::new(bps, values).expect("generated state is well formed")
}

/// Like [`random_state`] with values in `[0, 3]`.
pub fn random_nonnegative_state<R: Rng + ?Sized>(
    rng: &mut R,
    edges: &[EdgeId],
    limits: &RandomLimits,
) -> NetworkState<Rational> {
    random_state(rng, edges, limits).map(|x| {
        if *x < ratio(0, 1) {
            -x.clone()
        } else {
            x.clone()
        }
    })
}

/// Rational time in `[0, max]` with denominator at most `max_den`.
pub fn random_time<R: Rng + ?Sized>(rng: &mut R, max: i64, max_den: i64) -> Rational {
    rational_in(rng, 0, max, max_den)
}

/// Exact velocities `p/q` with `p, q` in `1..=4`.
pub fn random_velocities<R: Rng + ?Sized>(rng: &mut R, edges: &[EdgeId]) -> VelocityProfile {
    VelocityProfile::new(edges.iter().map(|e| {
        (
            *e,
            Velocity::Exact(ratio(rng.gen_range(1..=4), rng.gen_range(1..=4))),
        )
    }))
    .expect("positive velocities")
}
