//! Rational approximation of velocities and convergence tables.
//!
//! Each level of a schedule replaces every velocity by a rational
//! approximant, evolves exactly on the subdivided graph, and compares with a
//! reference: the exact flow when the true velocities are rational, the
//! characteristic tracer otherwise.

use crate::error::{Error, Result};
use crate::graph::{EdgeId, MetricGraph, Velocity, VelocityProfile};
use crate::resolvent::{resolvent_general, ResolventRequest};
use crate::scalar::{rational_from_f64, rational_to_f64, Rational};
use crate::semigroup::evolve_rational;
use crate::state::{NetworkState, TestFunction};
use crate::tracing::{TracedState, Tracer};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ApproxMethod {
    /// `n`-th continued-fraction convergent, counting `floor(x)` as the 0th.
    #[serde(rename = "cf")]
    ContinuedFraction,
    /// `floor(x 10^n) / 10^n`.
    #[serde(rename = "dec")]
    Decimal,
}

impl FromStr for ApproxMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cf" => Ok(Self::ContinuedFraction),
            "dec" => Ok(Self::Decimal),
            other => Err(Error::Argument(format!(
                "unknown method `{other}`; expected cf or dec"
            ))),
        }
    }
}

impl fmt::Display for ApproxMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::ContinuedFraction => "cf",
            Self::Decimal => "dec",
        })
    }
}

/// Levels used when none are given.
pub fn default_levels() -> Vec<usize> {
    (2..=7).collect()
}

/// Exact value of a velocity, reading floats as the binary rational they hold.
fn exact_value(v: &Velocity) -> Result<Rational> {
    match v {
        Velocity::Exact(r) => Ok(r.clone()),
        Velocity::Real(x) => rational_from_f64(*x),
    }
}

fn fits_i64(n: &BigInt) -> bool {
    n.to_i64().is_some()
}

/// Rational approximant of a positive `x` at level `n`.
pub fn approximant(x: &Rational, n: usize, method: ApproxMethod) -> Option<Rational> {
    match method {
        ApproxMethod::ContinuedFraction => {
            let (mut p0, mut q0) = (BigInt::one(), BigInt::zero());
            let (mut p1, mut q1) = (x.floor().to_integer(), BigInt::one());
            let mut rest = x - x.floor();
            for _ in 0..n {
                if rest.is_zero() {
                    break;
                }
                let inv = rest.recip();
                let a = inv.floor().to_integer();
                rest = &inv - inv.floor();
                let p2 = &a * &p1 + &p0;
                let q2 = &a * &q1 + &q0;
                (p0, q0, p1, q1) = (p1, q1, p2, q2);
                if !fits_i64(&q1) || !fits_i64(&p1) {
                    return None;
                }
            }
            Some(Rational::new(p1, q1))
        }
        ApproxMethod::Decimal => {
            let scale = num_traits::checked_pow(10i64, n)?;
            let scaled = (x * Rational::from_integer(scale.into()))
                .floor()
                .to_integer();
            fits_i64(&scaled).then(|| Rational::new(scaled, scale.into()))
        }
    }
}

/// Replaces every velocity on `edges` by its level-`n` approximant.
pub fn rational_approx(
    vel: &VelocityProfile,
    edges: &[EdgeId],
    n: usize,
    method: ApproxMethod,
) -> Result<VelocityProfile> {
    let mut out = Vec::with_capacity(edges.len());
    let mut overflowed = Vec::new();
    for e in edges {
        let x = exact_value(vel.get(*e)?)?;
        match approximant(&x, n, method) {
            Some(r) => out.push((*e, Velocity::Exact(r))),
            None => overflowed.push(*e),
        }
    }
    if !overflowed.is_empty() {
        return Err(Error::Overflow { edges: overflowed });
    }
    VelocityProfile::new(out)
}

/// Increasing levels with their approximating profiles.
#[derive(Clone, Debug)]
pub struct ApproximationSchedule {
    levels: Vec<usize>,
    method: ApproxMethod,
    profiles: Vec<VelocityProfile>,
}

impl ApproximationSchedule {
    /// Every approximant must lie in `(c_min / 2, 2 c_max)`.
    pub fn new(
        vel: &VelocityProfile,
        edges: &[EdgeId],
        levels: Vec<usize>,
        method: ApproxMethod,
    ) -> Result<Self> {
        if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Argument(format!(
                "levels must be nonempty and strictly increasing, got {levels:?}"
            )));
        }
        vel.covers(edges)?;
        let speeds: Vec<f64> = edges
            .iter()
            .map(|e| vel.get_f64(*e))
            .collect::<Result<_>>()?;
        let lo = speeds.iter().copied().fold(f64::INFINITY, f64::min) / 2.0;
        let hi = speeds.iter().copied().fold(0.0, f64::max) * 2.0;
        let mut profiles = Vec::with_capacity(levels.len());
        for n in &levels {
            let p = rational_approx(vel, edges, *n, method)?;
            for e in edges {
                let c = p.get_f64(*e)?;
                if !(c > lo && c < hi) {
                    return Err(Error::Argument(format!(
                        "level {n} approximates the velocity of edge {e} by {c}, outside ({lo}, {hi}); start at a higher level"
                    )));
                }
            }
            profiles.push(p);
        }
        Ok(Self {
            levels,
            method,
            profiles,
        })
    }

    pub fn levels(&self) -> &[usize] {
        &self.levels
    }

    pub fn method(&self) -> ApproxMethod {
        self.method
    }

    pub fn profiles(&self) -> &[VelocityProfile] {
        &self.profiles
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub level: usize,
    /// `max_j |c_j - c_j^(n)|`.
    pub velocity_error: f64,
    /// `|pair(T_n(t) f - T(t) f, g)|`, one entry per test function.
    pub weak_errors: Vec<f64>,
    /// `ess sup_s ||T_n(t) f (s) - T(t) f (s)||_1`.
    pub strong_semigroup_error: Option<f64>,
    /// Sup-sample `l^1` distance between the resolvents.
    pub resolvent_error: Option<f64>,
    pub sub_edges: Option<usize>,
}

/// Least-squares fit `error(n) ~ L * velocity_error(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LipschitzFit {
    pub slope: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub method: ApproxMethod,
    pub rows: Vec<ConvergenceRow>,
    pub test_functions: usize,
    pub lipschitz: Option<LipschitzFit>,
}

impl ConvergenceTable {
    /// Checks `weak <= strong * ||g||_{L^1}` on every row, up to `slack`.
    pub fn holder_holds(&self, gs: &[TestFunction<f64>], slack: f64) -> bool {
        let norms: Vec<f64> = gs.iter().map(TestFunction::l1_norm).collect();
        self.rows
            .iter()
            .all(|row| match row.strong_semigroup_error {
                Some(strong) => row
                    .weak_errors
                    .iter()
                    .zip(&norms)
                    .all(|(w, n)| *w <= strong * n + slack),
                None => true,
            })
    }
}

fn velocity_error(
    vel: &VelocityProfile,
    approx: &VelocityProfile,
    edges: &[EdgeId],
) -> Result<f64> {
    let mut worst = 0.0f64;
    for e in edges {
        let exact = exact_value(vel.get(*e)?)?;
        let diff = (exact - approx.get_exact(*e)?).abs();
        worst = worst.max(rational_to_f64(&diff));
    }
    Ok(worst)
}

fn finite_edges(g: &MetricGraph) -> Result<Vec<EdgeId>> {
    g.edge_ids()
        .ok_or_else(|| Error::Unsupported("approximation needs a finite graph".into()))
}

enum Reference {
    Exact(NetworkState<f64>),
    Traced(TracedState),
}

impl Reference {
    fn pair(&self, g: &TestFunction<f64>) -> f64 {
        match self {
            Reference::Exact(s) => s.pair(g),
            Reference::Traced(t) => t.pair(g),
        }
    }

    fn distance(&self, h: &NetworkState<f64>) -> f64 {
        match self {
            Reference::Exact(s) => s.sub(h).sup_norm(),
            Reference::Traced(t) => t.sup_distance(h),
        }
    }
}

/// Weak and strong semigroup errors per level at time `t`.
pub fn semigroup_convergence(
    g: &MetricGraph,
    vel: &VelocityProfile,
    f: &NetworkState<f64>,
    t: &Rational,
    gs: &[TestFunction<f64>],
    schedule: &ApproximationSchedule,
) -> Result<ConvergenceTable> {
    let edges = finite_edges(g)?;
    let reference = if vel.is_exact() {
        Reference::Exact(evolve_rational(g, vel, f, t)?)
    } else {
        Reference::Traced(Tracer::new(g, vel)?.trace_state(f, rational_to_f64(t))?)
    };
    let ref_pairs: Vec<f64> = gs.iter().map(|g| reference.pair(g)).collect();
    let rows = schedule
        .levels
        .par_iter()
        .zip(&schedule.profiles)
        .map(|(level, profile)| {
            let state = evolve_rational(g, profile, f, t)?;
            let sub_edges =
                crate::semigroup::common_multiplier(profile, &edges, Default::default())?
                    .1
                    .values()
                    .sum::<u64>() as usize;
            Ok(ConvergenceRow {
                level: *level,
                velocity_error: velocity_error(vel, profile, &edges)?,
                weak_errors: gs
                    .iter()
                    .zip(&ref_pairs)
                    .map(|(g, r)| (state.pair(g) - r).abs())
                    .collect(),
                strong_semigroup_error: Some(reference.distance(&state)),
                resolvent_error: None,
                sub_edges: Some(sub_edges),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceTable {
        method: schedule.method,
        rows,
        test_functions: gs.len(),
        lipschitz: None,
    })
}

/// Strong resolvent error per level, with the Lipschitz fit in the velocity error.
pub fn resolvent_convergence(
    g: &MetricGraph,
    vel: &VelocityProfile,
    lambda: Complex64,
    f: &NetworkState<f64>,
    schedule: &ApproximationSchedule,
    grid: usize,
    tol: f64,
) -> Result<ConvergenceTable> {
    let edges = finite_edges(g)?;
    let req = ResolventRequest::new(lambda, tol, grid);
    let reference = resolvent_general(g, vel, f, &req)?.state;
    let rows = schedule
        .levels
        .par_iter()
        .zip(&schedule.profiles)
        .map(|(level, profile)| {
            let approx = resolvent_general(g, profile, f, &req)?.state;
            Ok(ConvergenceRow {
                level: *level,
                velocity_error: velocity_error(vel, profile, &edges)?,
                weak_errors: Vec::new(),
                strong_semigroup_error: None,
                resolvent_error: Some(approx.sup_distance(&reference)?),
                sub_edges: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let lipschitz = lipschitz_fit(
        rows.iter()
            .map(|r| (r.velocity_error, r.resolvent_error.unwrap_or(0.0))),
    );
    Ok(ConvergenceTable {
        method: schedule.method,
        rows,
        test_functions: 0,
        lipschitz,
    })
}

/// Least-squares slope through the origin and the residual norm.
pub fn lipschitz_fit(points: impl Iterator<Item = (f64, f64)>) -> Option<LipschitzFit> {
    let points: Vec<(f64, f64)> = points.collect();
    let denom: f64 = points.iter().map(|(x, _)| x * x).sum();
    if denom == 0.0 {
        return None;
    }
    let slope = points.iter().map(|(x, y)| x * y).sum::<f64>() / denom;
    let residual = points
        .iter()
        .map(|(x, y)| (y - slope * x).powi(2))
        .sum::<f64>()
        .sqrt();
    Some(LipschitzFit { slope, residual })
}

/// Merges a semigroup table and a resolvent table over the same schedule.
pub fn merge_tables(semigroup: ConvergenceTable, resolvent: &ConvergenceTable) -> ConvergenceTable {
    let rows = semigroup
        .rows
        .into_iter()
        .zip(&resolvent.rows)
        .map(|(mut s, r)| {
            s.resolvent_error = r.resolvent_error;
            s
        })
        .collect();
    ConvergenceTable {
        method: semigroup.method,
        rows,
        test_functions: semigroup.test_functions,
        lipschitz: resolvent.lipschitz,
    }
}
