use crate::error::{Error, Result};
use crate::graph::{AdjacencyOperator, EdgeId, SparseVector};
use crate::state::{NetworkState, SampledState};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;

/// Residuals of `(lambda - A) R f = f` and of the boundary coupling.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityReport {
    pub grid: usize,
    /// `max ||lambda R(s) - C (R(s+h) - R(s-h)) / 2h - f(s)||_1` over samples
    /// whose stencil avoids every breakpoint of `f`.
    pub interior_residual: f64,
    pub interior_samples: usize,
    /// `||R(1) - B^C R(0)||_1`.
    pub trace_residual: f64,
    pub per_edge: BTreeMap<EdgeId, f64>,
}

/// Checks a sampled resolvent against its defining equations.
///
/// `op` supplies both the coupling and, when scaled, the velocities.
pub fn resolvent_identity_check(
    op: &AdjacencyOperator,
    lambda: Complex64,
    f: &NetworkState<f64>,
    r: &SampledState<Complex64>,
) -> Result<IdentityReport> {
    let m = r.grid_size();
    if m < 2 {
        return Err(Error::Argument("identity check needs M >= 2".into()));
    }
    let h = 1.0 / m as f64;
    let speed = |e: EdgeId| -> Result<f64> {
        match op.scaling() {
            Some(v) => v.get_f64(e),
            None => Ok(1.0),
        }
    };
    let bps = f.breakpoints_f64();
    let interior = &bps[1..bps.len() - 1];
    let mut per_edge: BTreeMap<EdgeId, f64> = BTreeMap::new();
    let mut worst = 0.0f64;
    let mut count = 0usize;
    for k in 1..m {
        let s = k as f64 / m as f64;
        if interior.iter().any(|b| (b - s).abs() <= h * (1.0 + 1e-9)) {
            continue;
        }
        count += 1;
        let fs = f.eval_f64(s);
        let mut support: Vec<EdgeId> = r.get(k).support().collect();
        support.extend(fs.support());
        support.extend(r.get(k - 1).support());
        support.extend(r.get(k + 1).support());
        support.sort();
        support.dedup();
        let mut total = 0.0;
        for e in support {
            let deriv = (r.get(k + 1).get(e) - r.get(k - 1).get(e)) / (2.0 * h);
            let res = (lambda * r.get(k).get(e) - deriv * speed(e)? - fs.get(e)).norm();
            let slot = per_edge.entry(e).or_default();
            *slot = slot.max(res);
            total += res;
        }
        worst = worst.max(total);
    }
    let pushed: SparseVector<Complex64> = op.apply(r.get(0))?;
    let trace_residual = r.get(m).sub(&pushed).l1_norm();
    Ok(IdentityReport {
        grid: m,
        interior_residual: worst,
        interior_samples: count,
        trace_residual,
        per_edge,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::resolvent::{resolvent_unit, ResolventRequest};
    use crate::scalar::{int, ratio};

    #[test]
    fn second_order_residual() {
        let op = AdjacencyOperator::unscaled(&fixtures::g5()).unwrap();
        let f =
            NetworkState::indicator(int(0), ratio(1, 2), SparseVector::unit(EdgeId(1))).unwrap();
        let lambda = Complex64::new(1.0, 1.0);
        let res = |m: usize| {
            let out = resolvent_unit(&op, &f, &ResolventRequest::new(lambda, 1e-14, m)).unwrap();
            resolvent_identity_check(&op, lambda, &f, &out.state).unwrap()
        };
        let (coarse, fine) = (res(64), res(128));
        assert!(coarse.interior_residual / fine.interior_residual >= 3.5);
        assert!(fine.trace_residual < 1e-12);
    }
}
