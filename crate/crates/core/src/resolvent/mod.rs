//! Resolvents `R(lambda, A) = (lambda - A)^{-1}` of the transport generator.
//!
//! Integrals of exponentials against step functions are evaluated in closed
//! form piece by piece, so the only approximation is the truncation of the
//! series over passages through vertices. Truncation indices come from a
//! priori geometric bounds and are reported with the output.

mod identity;
mod laplace;

pub use identity::{resolvent_identity_check, IdentityReport};
pub use laplace::{laplace_oracle, LaplaceOutput};

use crate::error::{Error, Result};
use crate::graph::{AdjacencyOperator, EdgeId, MetricGraph, SparseVector, VelocityProfile};
use crate::scalar::{rational_to_f64, Scalar};
use crate::state::{NetworkState, SampledState};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;

/// Largest number of series terms attempted before giving up.
pub const DEFAULT_MAX_TERMS: usize = 100_000;

#[derive(Clone, Copy, Debug)]
pub struct ResolventRequest {
    pub lambda: Complex64,
    pub tol: f64,
    pub grid: usize,
    pub max_terms: usize,
}

impl ResolventRequest {
    pub fn new(lambda: Complex64, tol: f64, grid: usize) -> Self {
        Self {
            lambda,
            tol,
            grid,
            max_terms: DEFAULT_MAX_TERMS,
        }
    }

    fn check(&self) -> Result<()> {
        if self.lambda.re.is_nan() || self.lambda.re <= 0.0 {
            return Err(Error::Domain(format!(
                "resolvent needs Re(lambda) > 0, got {}",
                self.lambda
            )));
        }
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::Argument(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.grid == 0 {
            return Err(Error::Argument("sample grid needs M >= 1".into()));
        }
        Ok(())
    }
}

/// Metadata reported with every resolvent evaluation.
#[derive(Clone, Debug, Default, Serialize)]
pub struct ResolventMeta {
    pub mode: String,
    pub lambda: [f64; 2],
    pub tol: f64,
    #[serde(rename = "K_used")]
    pub k_used: Option<usize>,
    pub tail_bound: f64,
    pub neumann_terms: Option<usize>,
    /// Velocity-weighted norm `max_j sum_i e^{-Re(lambda)/c_i} w_ij`, which
    /// controls the Neumann series.
    #[serde(rename = "norm_Blambda")]
    pub norm_blambda: Option<f64>,
    /// Plain `l^1` column-sum norm of `B^C_lambda`, for reference.
    #[serde(rename = "norm_Blambda_l1")]
    pub norm_blambda_l1: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct ResolventOutput {
    pub state: SampledState<Complex64>,
    pub meta: ResolventMeta,
}

/// `int_lo^hi e^{mu (s - x)} dx / c` written as `(e^{mu(s-lo)} - e^{mu(s-hi)}) / lambda`
/// with `mu = lambda / c`.
fn piece_weight(lambda: Complex64, mu: Complex64, s: f64, lo: f64, hi: f64) -> Complex64 {
    ((mu * (s - lo)).exp() - (mu * (s - hi)).exp()) / lambda
}

/// `int_s^1 e^{(lambda/c_j)(s - x)} f_j(x) dx / c_j` for every edge in the support.
fn local_part(
    f: &NetworkState<Complex64>,
    lambda: Complex64,
    speed: &dyn Fn(EdgeId) -> f64,
    s: f64,
) -> SparseVector<Complex64> {
    let bps = f.breakpoints_f64();
    let mut acc: BTreeMap<EdgeId, Complex64> = BTreeMap::new();
    for (k, v) in f.values().iter().enumerate() {
        let (lo, hi) = (bps[k], bps[k + 1]);
        if hi <= s {
            continue;
        }
        for (e, x) in v.iter() {
            let mu = lambda / speed(e);
            *acc.entry(e).or_default() += piece_weight(lambda, mu, s, lo.max(s), hi) * x;
        }
    }
    SparseVector::from_entries(acc)
}

/// Resolvent of the unit-velocity flow.
///
/// `(R f)(s) = int_s^1 e^{lambda(s-x)} f(x) dx + e^{-lambda(1-s)} sum_k e^{-lambda k} B^{k+1} y`
/// with `y = int_0^1 e^{-lambda x} f(x) dx`; the sum stops at the first `K`
/// with `e^{-Re(lambda) K} / (1 - e^{-Re(lambda)}) sup_norm(f) <= tol`.
pub fn resolvent_unit<S: Scalar>(
    op: &AdjacencyOperator,
    f: &NetworkState<S>,
    req: &ResolventRequest,
) -> Result<ResolventOutput> {
    req.check()?;
    if op.is_scaled() {
        return Err(Error::WrongOperator(
            "the unit-velocity resolvent needs the unscaled operator".into(),
        ));
    }
    let lambda = req.lambda;
    let r = lambda.re;
    let fc = f.map(Scalar::to_complex);
    let sup = S::real_to_f64(&f.sup_norm());
    let ratio = (-r).exp();
    let bound_at = |k: usize| ratio.powi(k as i32) / (1.0 - ratio) * sup;
    let k_needed = if sup == 0.0 {
        0
    } else {
        let k = ((sup / (req.tol * (1.0 - ratio))).ln() / r).ceil().max(0.0) as usize;
        // Guard against rounding in the logarithm.
        (k.saturating_sub(1)..=k + 1)
            .find(|k| bound_at(*k) <= req.tol)
            .unwrap_or(k + 1)
    };
    if k_needed > req.max_terms {
        return Err(Error::Truncation {
            tol: req.tol,
            achieved: bound_at(req.max_terms),
            terms: req.max_terms,
        });
    }

    let one = |_: EdgeId| 1.0;
    let y = local_part(&fc, lambda, &one, 0.0);
    let mut z = SparseVector::<Complex64>::zero();
    let mut w = op.apply(&y)?;
    let step = (-lambda).exp();
    let mut weight = Complex64::new(1.0, 0.0);
    for _ in 0..k_needed {
        z = z.add(&w.scale(&weight));
        w = op.apply(&w)?;
        weight *= step;
    }

    let m = req.grid;
    let samples: Vec<SparseVector<Complex64>> = (0..=m)
        .into_par_iter()
        .map(|k| {
            let s = k as f64 / m as f64;
            local_part(&fc, lambda, &one, s).add(&z.scale(&(-lambda * (1.0 - s)).exp()))
        })
        .collect();
    Ok(ResolventOutput {
        state: SampledState::new(samples)?,
        meta: ResolventMeta {
            mode: "unit".into(),
            lambda: [lambda.re, lambda.im],
            tol: req.tol,
            k_used: Some(k_needed),
            tail_bound: bound_at(k_needed),
            ..Default::default()
        },
    })
}

/// Resolvent for arbitrary velocities on a finite graph.
///
/// With `(R_lambda f)_j(s) = int_s^1 e^{(lambda/c_j)(s-x)} f_j(x) dx / c_j`,
/// `r_0 = (R_lambda f)(0)` and `B_lambda = E_lambda(-1) B^C`, the result is
/// `R_lambda f + E_lambda(s) x` where `x = sum_{k>=1} B_lambda^k r_0`.
pub fn resolvent_general<S: Scalar>(
    g: &MetricGraph,
    vel: &VelocityProfile,
    f: &NetworkState<S>,
    req: &ResolventRequest,
) -> Result<ResolventOutput> {
    req.check()?;
    let ids = g
        .edge_ids()
        .ok_or_else(|| Error::Unsupported("the general resolvent needs a finite graph".into()))?;
    let op = AdjacencyOperator::new(g, Some(vel.clone()))?;
    let lambda = req.lambda;
    let r = lambda.re;
    let speeds: BTreeMap<EdgeId, f64> = ids
        .iter()
        .map(|e| Ok((*e, vel.get_f64(*e)?)))
        .collect::<Result<_>>()?;
    let c_min = speeds.values().copied().fold(f64::INFINITY, f64::min);

    let mut rho = 0.0f64;
    let mut rho_l1 = 0.0f64;
    for j in &ids {
        let mut weighted = 0.0;
        let mut plain = 0.0;
        for (i, w) in g.column(*j)? {
            let damp = (-r / speeds[&i]).exp();
            weighted += damp * rational_to_f64(&w);
            plain += damp * speeds[j] / speeds[&i] * rational_to_f64(&w);
        }
        rho = rho.max(weighted);
        rho_l1 = rho_l1.max(plain);
    }
    if rho >= 1.0 {
        return Err(Error::ContractionViolation { norm: rho });
    }

    let fc = f.map(Scalar::to_complex);
    let speed = |e: EdgeId| speeds.get(&e).copied().unwrap_or(f64::NAN);
    if let Some(e) = fc.support().into_iter().find(|e| !speeds.contains_key(e)) {
        return Err(Error::Argument(format!("edge {e} is not in the graph")));
    }
    let damping: BTreeMap<EdgeId, Complex64> = speeds
        .iter()
        .map(|(e, c)| (*e, (-lambda / *c).exp()))
        .collect();
    let weighted_norm =
        |v: &SparseVector<Complex64>| -> f64 { v.iter().map(|(e, x)| speeds[&e] * x.norm()).sum() };
    let b_lambda = |v: &SparseVector<Complex64>| -> Result<SparseVector<Complex64>> {
        let w = op.apply(v)?;
        Ok(SparseVector::from_entries(
            w.iter().map(|(e, x)| (e, damping[&e] * x)),
        ))
    };

    let r0 = local_part(&fc, lambda, &speed, 0.0);
    let mut x = SparseVector::<Complex64>::zero();
    let mut term = b_lambda(&r0)?;
    let mut terms = 0usize;
    let threshold = req.tol * (1.0 - rho) * c_min;
    let tail = loop {
        let size = weighted_norm(&term);
        if size == 0.0 {
            break 0.0;
        }
        x = x.add(&term);
        terms += 1;
        if size <= threshold {
            break rho / (1.0 - rho) * size / c_min;
        }
        if terms >= req.max_terms {
            return Err(Error::Truncation {
                tol: req.tol,
                achieved: size / ((1.0 - rho) * c_min),
                terms,
            });
        }
        term = b_lambda(&term)?;
    };

    let m = req.grid;
    let samples: Vec<SparseVector<Complex64>> = (0..=m)
        .into_par_iter()
        .map(|k| {
            let s = k as f64 / m as f64;
            let boundary = SparseVector::from_entries(
                x.iter()
                    .map(|(e, v)| (e, (lambda * s / speeds[&e]).exp() * v)),
            );
            local_part(&fc, lambda, &speed, s).add(&boundary)
        })
        .collect();
    Ok(ResolventOutput {
        state: SampledState::new(samples)?,
        meta: ResolventMeta {
            mode: "general".into(),
            lambda: [lambda.re, lambda.im],
            tol: req.tol,
            tail_bound: tail,
            neumann_terms: Some(terms),
            norm_blambda: Some(rho),
            norm_blambda_l1: Some(rho_l1),
            ..Default::default()
        },
    })
}
