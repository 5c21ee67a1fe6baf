//! Transport semigroups.
//!
//! With unit velocities the flow is an explicit shift: writing `t = N + tau`
//! with `tau` in `[0, 1)`, the value at `s` is `B^n f(t + s - n)` where
//! `n = floor(t + s)`. Rational velocities reduce to this case on a subdivided
//! graph; absorption is added as a truncated Dyson-Phillips expansion.

mod absorption;
mod subdivision;

pub use absorption::{evolve_absorbing, AbsorbedState, AbsorptionProfile};
pub use subdivision::{
    common_multiplier, evolve_rational, lift_state, project_state, subdivide, RationalFlow,
    SubdivisionLimits, SubdivisionPlan,
};

use crate::error::{Error, Result};
use crate::graph::{AdjacencyOperator, SparseVector};
use crate::scalar::{floor_to_i64, fract, int, Rational, Scalar};
use crate::state::NetworkState;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use std::collections::BTreeSet;

/// Exact evolutions that the Laplace oracle can integrate.
pub trait ExactEvolver: Sync {
    fn evolve<S: Scalar>(&self, f: &NetworkState<S>, t: &Rational) -> Result<NetworkState<S>>;

    /// Every time in `[0, t_max]` at which `t -> evolve(f, t)(s)` can jump on
    /// some edge, sorted and deduplicated.
    fn jump_times<S: Scalar>(
        &self,
        f: &NetworkState<S>,
        s: &Rational,
        t_max: &Rational,
    ) -> Result<Vec<Rational>>;
}

/// `T(t) f` for unit velocities.
pub fn evolve_unit<S: Scalar>(
    op: &AdjacencyOperator,
    f: &NetworkState<S>,
    t: &Rational,
) -> Result<NetworkState<S>> {
    if op.is_scaled() {
        return Err(Error::WrongOperator(
            "the unit-velocity flow needs the unscaled operator".into(),
        ));
    }
    shift_evolve(op, f, t)
}

/// Shifts every edge by `t` and pushes what leaves through `s = 0` into the
/// tails via `op`.
pub(crate) fn shift_evolve<S: Scalar>(
    op: &AdjacencyOperator,
    f: &NetworkState<S>,
    t: &Rational,
) -> Result<NetworkState<S>> {
    if t.is_negative() {
        return Err(Error::Domain(format!("negative time {t}")));
    }
    let whole = floor_to_i64(t)
        .and_then(|n| u64::try_from(n).ok())
        .ok_or_else(|| Error::Argument(format!("time {t} too large")))?;
    let tau = fract(t);
    let powered: Vec<SparseVector<S>> = f
        .values()
        .par_iter()
        .map(|v| op.apply_power(v, whole))
        .collect::<Result<_>>()?;

    let mut bps = Vec::with_capacity(2 * f.piece_count() + 1);
    let mut vals = Vec::with_capacity(2 * f.piece_count());
    for ((lo, hi, _), p) in f.pieces().zip(&powered) {
        if *hi > tau {
            bps.push(lo.max(&tau) - &tau);
            vals.push(p.clone());
        }
    }
    if !tau.is_zero() {
        let wrapped: Vec<(Rational, usize)> = f
            .pieces()
            .enumerate()
            .filter(|(_, (lo, _, _))| **lo < tau)
            .map(|(k, (lo, _, _))| (lo + int(1) - &tau, k))
            .collect();
        let pushed: Vec<SparseVector<S>> = wrapped
            .par_iter()
            .map(|(_, k)| op.apply(&powered[*k]))
            .collect::<Result<_>>()?;
        for ((start, _), v) in wrapped.into_iter().zip(pushed) {
            bps.push(start);
            vals.push(v);
        }
    }
    bps.push(int(1));
    Ok(NetworkState::canonical(bps, vals))
}

/// The unit-velocity flow as an [`ExactEvolver`].
#[derive(Clone, Debug)]
pub struct UnitFlow {
    op: AdjacencyOperator,
}

impl UnitFlow {
    pub fn new(op: AdjacencyOperator) -> Result<Self> {
        if op.is_scaled() {
            return Err(Error::WrongOperator(
                "the unit-velocity flow needs the unscaled operator".into(),
            ));
        }
        Ok(Self { op })
    }

    pub fn operator(&self) -> &AdjacencyOperator {
        &self.op
    }
}

impl ExactEvolver for UnitFlow {
    fn evolve<S: Scalar>(&self, f: &NetworkState<S>, t: &Rational) -> Result<NetworkState<S>> {
        shift_evolve(&self.op, f, t)
    }

    fn jump_times<S: Scalar>(
        &self,
        f: &NetworkState<S>,
        s: &Rational,
        t_max: &Rational,
    ) -> Result<Vec<Rational>> {
        Ok(shift_jump_times(f.breakpoints(), s, t_max)
            .into_iter()
            .collect())
    }
}

/// Times `n + b - s` in `[0, t_max]` for grid points `b` in `[0, 1)`.
pub(crate) fn shift_jump_times(
    grid: &[Rational],
    s: &Rational,
    t_max: &Rational,
) -> BTreeSet<Rational> {
    let mut out = BTreeSet::new();
    let last = floor_to_i64(&(t_max + s)).unwrap_or(0).max(0);
    for b in &grid[..grid.len() - 1] {
        for n in 0..=last + 1 {
            let t = int(n) + b - s;
            if t.is_negative() {
                continue;
            }
            if t > *t_max {
                break;
            }
            out.insert(t);
        }
    }
    out
}
