use super::subdivision::{lift_state, project_state, RationalFlow};
use crate::error::{Error, Result};
use crate::graph::{EdgeId, MetricGraph, SparseVector, VelocityProfile};
use crate::scalar::{int, ratio, rational_to_f64, Rational};
use crate::state::{NetworkState, SampledState};
use num_traits::Signed;
use rayon::prelude::*;
use serde::Serialize;

/// Absorption rates `q_j`: step functions on a common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct AbsorptionProfile {
    rates: NetworkState<f64>,
}

impl AbsorptionProfile {
    pub fn new(rates: NetworkState<f64>) -> Self {
        Self { rates }
    }

    pub fn zero() -> Self {
        Self::new(NetworkState::zero())
    }

    /// The same constant rate on every listed edge.
    pub fn constant(edges: &[EdgeId], q: f64) -> Self {
        Self::new(NetworkState::constant(SparseVector::from_entries(
            edges.iter().map(|e| (*e, q)),
        )))
    }

    /// Builds the profile from per-edge `(breakpoints, values)` pairs.
    pub fn from_edges(
        edges: impl IntoIterator<Item = (EdgeId, Vec<Rational>, Vec<f64>)>,
    ) -> Result<Self> {
        let mut acc = NetworkState::<f64>::zero();
        for (e, bps, vals) in edges {
            let values = vals
                .into_iter()
                .map(|v| SparseVector::from_entries([(e, v)]))
                .collect();
            acc = acc.add(&NetworkState::new(bps, values)?);
        }
        Ok(Self::new(acc))
    }

    pub fn rates(&self) -> &NetworkState<f64> {
        &self.rates
    }

    /// `sup_j sup_s |q_j(s)|`.
    pub fn bound(&self) -> f64 {
        self.rates
            .values()
            .iter()
            .flat_map(|v| v.iter().map(|(_, x)| x.abs()))
            .fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.rates.values().iter().all(SparseVector::is_empty)
    }
}

/// Result of [`evolve_absorbing`].
#[derive(Clone, Debug)]
pub struct AbsorbedState {
    pub state: SampledState<f64>,
    pub exact_state: NetworkState<f64>,
    /// `x^{K+1} / (K+1)! * e^x * sup_norm(f)` with `x = ||q|| t`.
    pub tail_bound: f64,
    /// Sup-sample distance to the same expansion on half as many panels.
    pub quadrature_estimate: f64,
    /// `true` when the flow is a contraction, so the tail bound is rigorous.
    pub certified: bool,
    pub report: AbsorptionReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct AbsorptionReport {
    pub order: usize,
    pub quad_steps: usize,
    pub reference_steps: usize,
    pub q_bound: f64,
}

/// Truncated Dyson-Phillips expansion of the flow with absorption `q`.
///
/// `S_0(t) = T(t)` and `S_{k+1}(t) f = int_0^t T(t - r) q S_k(r) f dr`; each
/// level is integrated with the composite midpoint rule on `quad_steps`
/// panels. The integrals are carried along the panel edges, so level `k + 1`
/// needs `S_k` only at panel midpoints.
#[allow(clippy::too_many_arguments)]
pub fn evolve_absorbing(
    g: &MetricGraph,
    vel: &VelocityProfile,
    q: &AbsorptionProfile,
    f: &NetworkState<f64>,
    t: &Rational,
    order: usize,
    quad_steps: usize,
    samples: usize,
) -> Result<AbsorbedState> {
    if quad_steps == 0 {
        return Err(Error::Argument("quad_steps must be at least 1".into()));
    }
    if t.is_negative() {
        return Err(Error::Domain(format!("negative time {t}")));
    }
    let flow = RationalFlow::new(g, vel)?;
    let plan = flow.plan();
    let f_lift = lift_state(plan, f)?;
    let q_lift = lift_state(plan, q.rates())?;

    let fine = dyson_phillips(&flow, &q_lift, &f_lift, t, order, quad_steps)?;
    let exact_state = project_state(plan, &fine)?;
    let state = exact_state.sample(samples)?;

    let reference_steps = if quad_steps >= 2 { quad_steps / 2 } else { 2 };
    let quadrature_estimate = if q.is_zero() || order == 0 {
        0.0
    } else {
        let coarse = dyson_phillips(&flow, &q_lift, &f_lift, t, order, reference_steps)?;
        project_state(plan, &coarse)?
            .sample(samples)?
            .sup_distance(&state)?
    };

    let x = q.bound() * rational_to_f64(t);
    let factorial: f64 = (1..=order + 1).map(|k| k as f64).product();
    let tail_bound = if q.is_zero() {
        0.0
    } else {
        x.powi(order as i32 + 1) / factorial * x.exp() * f.sup_norm()
    };
    Ok(AbsorbedState {
        state,
        exact_state,
        tail_bound,
        quadrature_estimate,
        certified: vel.is_uniform(),
        report: AbsorptionReport {
            order,
            quad_steps,
            reference_steps,
            q_bound: q.bound(),
        },
    })
}

/// Sum of the first `order + 1` expansion terms at time `t`, on the lifted graph.
fn dyson_phillips(
    flow: &RationalFlow,
    q: &NetworkState<f64>,
    f: &NetworkState<f64>,
    t: &Rational,
    order: usize,
    panels: usize,
) -> Result<NetworkState<f64>> {
    let h = t / int(panels as i64);
    let half = &h / int(2);
    let h_f64 = rational_to_f64(&h);
    let mids: Vec<Rational> = (0..panels)
        .map(|m| &h * ratio(2 * m as i64 + 1, 2))
        .collect();

    let mut total = flow.evolve_lifted(f, t)?;
    if order == 0 || q.values().iter().all(SparseVector::is_empty) {
        return Ok(total);
    }
    let mut level: Vec<NetworkState<f64>> = mids
        .par_iter()
        .map(|s| flow.evolve_lifted(f, s))
        .collect::<Result<_>>()?;

    for k in 1..=order {
        let forced: Vec<NetworkState<f64>> = level.par_iter().map(|s| q.pointwise_mul(s)).collect();
        let advanced: Vec<NetworkState<f64>> = forced
            .par_iter()
            .map(|p| flow.evolve_lifted(p, &half))
            .collect::<Result<_>>()?;
        // Integral up to each panel edge.
        let mut edges = Vec::with_capacity(panels + 1);
        edges.push(NetworkState::<f64>::zero());
        for a in &advanced {
            let prev = edges.last().expect("nonempty");
            let next = flow.evolve_lifted(prev, &h)?.add(&a.scale(&h_f64));
            edges.push(next);
        }
        total = total.add(edges.last().expect("nonempty"));
        if k == order {
            break;
        }
        level = edges[..panels]
            .par_iter()
            .zip(&forced)
            .map(|(e, p)| Ok(flow.evolve_lifted(e, &half)?.add(&p.scale(&(h_f64 / 2.0)))))
            .collect::<Result<_>>()?;
    }
    Ok(total)
}

impl AbsorbedState {
    /// Tail bound plus quadrature estimate.
    pub fn error_bound(&self) -> f64 {
        self.tail_bound + self.quadrature_estimate
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::graph::AdjacencyOperator;
    use crate::semigroup::{evolve_rational, evolve_unit};

    fn unit_vel() -> VelocityProfile {
        VelocityProfile::exact([(1, int(1)), (2, int(1))]).unwrap()
    }

    #[test]
    fn zero_rate_is_plain_flow() {
        let g = fixtures::g2();
        let vel = VelocityProfile::exact([(1, ratio(1, 2)), (2, int(1))]).unwrap();
        let f =
            NetworkState::indicator(int(0), ratio(1, 3), SparseVector::unit(EdgeId(1))).unwrap();
        let out = evolve_absorbing(
            &g,
            &vel,
            &AbsorptionProfile::zero(),
            &f,
            &ratio(3, 4),
            4,
            8,
            16,
        )
        .unwrap();
        let plain = evolve_rational(&g, &vel, &f, &ratio(3, 4))
            .unwrap()
            .sample(16)
            .unwrap();
        assert_eq!(out.state, plain);
        assert_eq!(out.tail_bound, 0.0);
    }

    #[test]
    fn constant_rate_scales_the_flow() {
        let g = fixtures::g2();
        let f =
            NetworkState::indicator(int(0), ratio(1, 2), SparseVector::unit(EdgeId(1))).unwrap();
        let q0 = -0.5;
        let q = AbsorptionProfile::constant(&[EdgeId(1), EdgeId(2)], q0);
        let t = ratio(1, 2);
        let out = evolve_absorbing(&g, &unit_vel(), &q, &f, &t, 6, 16, 8).unwrap();
        let op = AdjacencyOperator::unscaled(&g).unwrap();
        let expected = evolve_unit(&op, &f, &t)
            .unwrap()
            .scale(&(q0 * 0.5f64).exp())
            .sample(8)
            .unwrap();
        let err = out.state.sup_distance(&expected).unwrap();
        assert!(err <= out.error_bound(), "{err} > {}", out.error_bound());
        assert!(out.certified);
    }

    #[test]
    fn zero_panels_rejected() {
        let f = NetworkState::<f64>::zero();
        assert!(matches!(
            evolve_absorbing(
                &fixtures::g2(),
                &unit_vel(),
                &AbsorptionProfile::zero(),
                &f,
                &int(1),
                1,
                0,
                4
            ),
            Err(Error::Argument(_))
        ));
    }
}
