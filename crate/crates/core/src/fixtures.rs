//! Small reference graphs.

use crate::graph::{Edge, EdgeId, MetricGraph, VertexId};
use crate::scalar::{int, ratio, Rational};

/// Two-cycle `v1 -> v2 -> v1`; `B` swaps the two edges.
pub fn g2() -> MetricGraph {
    MetricGraph::finite(
        "G2",
        [Edge::new(1, "v1", "v2"), Edge::new(2, "v2", "v1")],
        [
            (EdgeId(2), EdgeId(1), int(1)),
            (EdgeId(1), EdgeId(2), int(1)),
        ],
    )
    .expect("G2 is well formed")
}

/// Five edges: `e1` splits evenly into `e2` and `e3`, which return through
/// `e4` and `e5` to the start of `e1`.
pub fn g5() -> MetricGraph {
    MetricGraph::finite(
        "G5",
        [
            Edge::new(1, "v1", "v2"),
            Edge::new(2, "v2", "v3"),
            Edge::new(3, "v2", "v4"),
            Edge::new(4, "v3", "v1"),
            Edge::new(5, "v4", "v1"),
        ],
        [
            (EdgeId(2), EdgeId(1), ratio(1, 2)),
            (EdgeId(3), EdgeId(1), ratio(1, 2)),
            (EdgeId(4), EdgeId(2), int(1)),
            (EdgeId(5), EdgeId(3), int(1)),
            (EdgeId(1), EdgeId(4), int(1)),
            (EdgeId(1), EdgeId(5), int(1)),
        ],
    )
    .expect("G5 is well formed")
}

/// Lazily generated path over the integers: edge `k` runs from `v{k}` to
/// `v{k+1}` and feeds edge `k + 1` with weight 1.
pub fn bi_infinite_path() -> MetricGraph {
    MetricGraph::from_fns(
        "path",
        |j: EdgeId| std::iter::once((EdgeId(j.0 + 1), Rational::from(int(1)))),
        |j: EdgeId| {
            Some((
                VertexId(format!("v{}", j.0)),
                VertexId(format!("v{}", j.0 + 1)),
            ))
        },
    )
}
