//! Linear transport flows on metric graphs.
//!
//! Every edge of a directed, locally finite graph is identified with `[0, 1]`,
//! with its tail at `1` and its head at `0`. Material moves toward the head and
//! is redistributed at vertices by the column-stochastic line-graph matrix
//! `B` (or its velocity-scaled conjugate `C^-1 B C`).
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`]: graph model, validation, sparse vectors and the adjacency operator.
//! * [`state`]: exact piecewise-constant states, sampled states and test functions.
//! * [`semigroup`]: the explicit shift semigroup, subdivision for rational
//!   velocities and the Dyson-Phillips expansion for absorption.
//! * [`tracing`]: pointwise backward characteristic tracing for arbitrary velocities.
//! * [`resolvent`]: closed-form resolvents and the Laplace-transform oracle.
//! * [`approximation`]: rational approximation of real velocities and convergence tables.
//! * [`io`]: the line-oriented graph/state formats and CSV emission.

pub mod approximation;
pub mod checks;
pub mod error;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod randgen;
pub mod resolvent;
pub mod scalar;
pub mod semigroup;
pub mod state;
pub mod tracing;

/// Version recorded in every artifact.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use error::{Error, Result};
pub use graph::{
    AdjacencyOperator, Coef, EdgeId, MetricGraph, SparseVector, ValidationReport, Velocity,
    VelocityProfile, VertexId,
};
pub use scalar::{Rational, Scalar};
pub use state::{NetworkState, SampledState, TestFunction};
