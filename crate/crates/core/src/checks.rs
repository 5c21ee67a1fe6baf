//! Randomised invariant checks, grouped into suites.
//!
//! Every check is deterministic for a given seed. Reports carry no timings so
//! that identical runs produce identical artifacts.

use crate::approximation::{resolvent_convergence, ApproxMethod, ApproximationSchedule};
use crate::error::{Error, Result};
use crate::fixtures;
use crate::graph::{AdjacencyOperator, EdgeId, SparseVector, VelocityProfile};
use crate::randgen::{
    random_graph, random_nonnegative_state, random_state, random_time, random_velocities,
    RandomLimits,
};
use crate::resolvent::{
    laplace_oracle, resolvent_general, resolvent_identity_check, resolvent_unit, ResolventRequest,
};
use crate::scalar::{int, ratio, Rational};
use crate::semigroup::{
    evolve_absorbing, evolve_rational, evolve_unit, AbsorptionProfile, UnitFlow,
};
use crate::state::NetworkState;
use crate::tracing::Tracer;
use num_complex::Complex64;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Semigroup,
    Oracle,
    Resolvent,
    Approximation,
    Absorption,
    Lazy,
    All,
}

impl Suite {
    const EACH: [Suite; 6] = [
        Suite::Semigroup,
        Suite::Oracle,
        Suite::Resolvent,
        Suite::Approximation,
        Suite::Absorption,
        Suite::Lazy,
    ];

    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "semigroup" => Suite::Semigroup,
            "oracle" => Suite::Oracle,
            "resolvent" => Suite::Resolvent,
            "approximation" => Suite::Approximation,
            "absorption" => Suite::Absorption,
            "lazy" => Suite::Lazy,
            "all" => Suite::All,
            other => return Err(Error::Argument(format!("unknown suite `{other}`"))),
        })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Suite::Semigroup => "semigroup",
            Suite::Oracle => "oracle",
            Suite::Resolvent => "resolvent",
            Suite::Approximation => "approximation",
            Suite::Absorption => "absorption",
            Suite::Lazy => "lazy",
            Suite::All => "all",
        };
        f.write_str(name)
    }
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct CheckConfig {
    pub seed: u64,
    /// Random instances per randomised check.
    pub trials: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            trials: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub seed: u64,
    pub trials: usize,
    pub outcomes: Vec<CheckOutcome>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }
}

type Check = fn(&CheckConfig) -> Result<(bool, String)>;

fn registry() -> Vec<(Suite, &'static str, Check)> {
    vec![
        (Suite::Semigroup, "semigroup_law", semigroup_law),
        (Suite::Semigroup, "contraction", contraction),
        (Suite::Semigroup, "mass_conservation", mass_conservation),
        (Suite::Oracle, "dense_power", dense_power),
        (Suite::Oracle, "tracing_agreement", tracing_agreement),
        (Suite::Resolvent, "unit_vs_general", unit_vs_general),
        (Suite::Resolvent, "positivity_and_norm", positivity_and_norm),
        (Suite::Resolvent, "identity_residual", identity_residual),
        (Suite::Resolvent, "laplace_duality", laplace_duality),
        (
            Suite::Approximation,
            "resolvent_convergence",
            approximation_convergence,
        ),
        (Suite::Absorption, "zero_rate", zero_rate),
        (Suite::Absorption, "constant_rate", constant_rate),
        (Suite::Lazy, "finite_propagation", finite_propagation),
    ]
}

/// Runs every check of `suite`, each with its own generator seeded from
/// `cfg.seed`.
pub fn run_suite(suite: Suite, cfg: &CheckConfig) -> CheckReport {
    let outcomes = registry()
        .into_iter()
        .filter(|(s, _, _)| suite.includes(*s))
        .map(|(s, name, check)| {
            let (passed, detail) = match check(cfg) {
                Ok(r) => r,
                Err(e) => (false, format!("error: {e}")),
            };
            CheckOutcome {
                suite: s.to_string(),
                name: name.to_string(),
                passed,
                detail,
            }
        })
        .collect();
    CheckReport {
        seed: cfg.seed,
        trials: cfg.trials,
        outcomes,
    }
}

/// Names of the individual suites, for help text.
pub fn suite_names() -> Vec<String> {
    Suite::EACH.iter().map(Suite::to_string).collect()
}

fn rng(cfg: &CheckConfig, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt)
}

struct Trial {
    op: AdjacencyOperator,
    edges: Vec<EdgeId>,
    f: NetworkState<Rational>,
    t: Rational,
    s: Rational,
}

fn trial(rng: &mut ChaCha8Rng) -> Result<Trial> {
    let limits = RandomLimits::default();
    let g = random_graph(rng, &limits);
    let edges = g.edge_ids().unwrap_or_default();
    let f = random_state(rng, &edges, &limits);
    Ok(Trial {
        op: AdjacencyOperator::unscaled(&g)?,
        edges,
        f,
        t: random_time(rng, 3, 8),
        s: random_time(rng, 3, 8),
    })
}

fn semigroup_law(cfg: &CheckConfig) -> Result<(bool, String)> {
    let mut rng = rng(cfg, 1);
    for k in 0..cfg.trials {
        let tr = trial(&mut rng)?;
        let composed = evolve_unit(&tr.op, &evolve_unit(&tr.op, &tr.f, &tr.s)?, &tr.t)?;
        let direct = evolve_unit(&tr.op, &tr.f, &(&tr.t + &tr.s))?;
        if composed != direct {
            return Ok((
                false,
                format!("trial {k}: T(t)T(s)f != T(t+s)f at t={}, s={}", tr.t, tr.s),
            ));
        }
    }
    Ok((true, format!("{} trials, exact", cfg.trials)))
}

fn contraction(cfg: &CheckConfig) -> Result<(bool, String)> {
    let mut rng = rng(cfg, 2);
    for k in 0..cfg.trials {
        let tr = trial(&mut rng)?;
        let out = evolve_unit(&tr.op, &tr.f, &tr.t)?;
        if out.sup_norm() > tr.f.sup_norm() {
            return Ok((false, format!("trial {k}: sup norm grew at t={}", tr.t)));
        }
    }
    Ok((true, format!("{} trials, exact", cfg.trials)))
}

fn mass_conservation(cfg: &CheckConfig) -> Result<(bool, String)> {
    let mut rng = rng(cfg, 3);
    let mut worst_float = 0.0f64;
    for k in 0..cfg.trials {
        let tr = trial(&mut rng)?;
        if evolve_unit(&tr.op, &tr.f, &tr.t)?.total_mass() != tr.f.total_mass() {
            return Ok((false, format!("trial {k}: exact mass changed")));
        }
        let ff = tr.f.to_f64();
        let drift = (evolve_unit(&tr.op, &ff, &tr.t)?.total_mass() - ff.total_mass()).abs();
        worst_float = worst_float.max(drift);
    }
    Ok((
        worst_float <= 1e-12,
        format!(
            "{} trials, exact path exact, floating drift {worst_float:.3e}",
            cfg.trials
        ),
    ))
}

fn dense_power(cfg: &CheckConfig) -> Result<(bool, String)> {
    let mut rng = rng(cfg, 4);
    let mut worst = 0.0f64;
    for _ in 0..cfg.trials.min(50) {
        let tr = trial(&mut rng)?;
        let n = rng.gen_range(0..12u64);
        let dense = tr.op.dense_f64(&tr.edges)?;
        let v: Vec<f64> = tr.edges.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut w = v.clone();
        for _ in 0..n {
            w = dense
                .iter()
                .map(|row| row.iter().zip(&w).map(|(a, b)| a * b).sum())
                .collect();
        }
        let sparse = tr.op.apply_power(
            &SparseVector::from_entries(tr.edges.iter().copied().zip(v)),
            n,
        )?;
        for (e, x) in tr.edges.iter().zip(&w) {
            worst = worst.max((sparse.get(*e) - x).abs());
        }
    }
    Ok((worst <= 1e-12, format!("max deviation {worst:.3e}")))
}

fn tracing_agreement(cfg: &CheckConfig) -> Result<(bool, String)> {
    let mut rng = rng(cfg, 5);
    let mut worst = 0.0f64;
    let limits = RandomLimits {
        max_edges: 6,
        max_pieces: 4,
        ..Default::default()
    };
    for _ in 0..cfg.trials.min(30) {
        let g = random_graph(&mut rng, &limits);
        let edges = g.edge_ids().unwrap_or_default();
        let vel = random_velocities(&mut rng, &edges);
        let f = random_state(&mut rng, &edges, &limits).to_f64();
        let t = random_time(&mut rng, 2, 4);
        let exact = evolve_rational(&g, &vel, &f, &t)?;
        let traced = Tracer::new(&g, &vel)?.trace_state(&f, crate::scalar::rational_to_f64(&t))?;
        worst = worst.max(traced.sup_distance(&exact));
    }
    Ok((worst <= 1e-12, format!("max deviation {worst:.3e}")))
}

fn resolvent_instance(
    rng: &mut ChaCha8Rng,
) -> Result<(crate::graph::MetricGraph, NetworkState<f64>)> {
    let limits = RandomLimits::default();
    let g = random_graph(rng, &limits);
    let edges = g.edge_ids().unwrap_or_default();
    Ok((g, random_nonnegative_state(rng, &edges, &limits).to_f64()))
}

fn unit_vs_general(cfg: &CheckConfig) -> Result<(bool, String)> {
    let mut rng = rng(cfg, 6);
    let unit = VelocityProfile::uniform(int(1))?;
    let mut worst = 0.0f64;
    for _ in 0..cfg.trials.min(30) {
        let (g, f) = resolvent_instance(&mut rng)?;
        let lambda = Complex64::new(rng.gen_range(0.5..3.0), rng.gen_range(-2.0..2.0));
        let req = ResolventRequest::new(lambda, 1e-13, 64);
        let a = resolvent_unit(&AdjacencyOperator::unscaled(&g)?, &f, &req)?;
        let b = resolvent_general(&g, &unit, &f, &req)?;
        worst = worst.max(a.state.sup_distance(&b.state)?);
    }
    Ok((worst <= 1e-10, format!("max distance {worst:.3e}")))
}

fn positivity_and_norm(cfg: &CheckConfig) -> Result<(bool, String)> {
    let mut rng = rng(cfg, 7);
    let mut lowest = 0.0f64;
    let mut excess = f64::NEG_INFINITY;
    for _ in 0..cfg.trials.min(30) {
        let (g, f) = resolvent_instance(&mut rng)?;
        let lambda: f64 = rng.gen_range(0.25..4.0);
        let req = ResolventRequest::new(Complex64::new(lambda, 0.0), 1e-13, 64);
        let out = resolvent_unit(&AdjacencyOperator::unscaled(&g)?, &f, &req)?;
        for v in out.state.samples() {
            for (_, x) in v.iter() {
                lowest = lowest.min(x.re);
            }
        }
        excess = excess.max(out.state.sup_norm() - f.sup_norm() / lambda);
    }
    Ok((
        lowest >= -1e-14 && excess <= 1e-10,
        format!("min value {lowest:.3e}, max excess over ||f||/lambda {excess:.3e}"),
    ))
}

fn identity_residual(_cfg: &CheckConfig) -> Result<(bool, String)> {
    let g = fixtures::g5();
    let op = AdjacencyOperator::unscaled(&g)?;
    let f = NetworkState::indicator(ratio(1, 4), ratio(1, 2), SparseVector::unit(EdgeId(1)))?.add(
        &NetworkState::constant(SparseVector::from_entries([(EdgeId(4), 0.5)])),
    );
    let lambda = Complex64::new(1.0, 1.0);
    let residual = |m: usize| -> Result<_> {
        let out = resolvent_unit(&op, &f, &ResolventRequest::new(lambda, 1e-14, m))?;
        resolvent_identity_check(&op, lambda, &f, &out.state)
    };
    let (coarse, fine) = (residual(256)?, residual(512)?);
    let ratio = coarse.interior_residual / fine.interior_residual;
    Ok((
        ratio >= 3.5 && fine.trace_residual <= 1e-8,
        format!(
            "residual ratio {ratio:.3}, trace residual {:.3e}",
            fine.trace_residual
        ),
    ))
}

fn laplace_duality(_cfg: &CheckConfig) -> Result<(bool, String)> {
    let g = fixtures::g2();
    let op = AdjacencyOperator::unscaled(&g)?;
    let f = NetworkState::indicator(int(0), ratio(1, 3), SparseVector::unit(EdgeId(1)))?;
    let lambda = Complex64::new(1.0, 1.0);
    let exact = resolvent_unit(&op, &f, &ResolventRequest::new(lambda, 1e-12, 16))?;
    let oracle = laplace_oracle(&UnitFlow::new(op)?, lambda, &f, &int(12), 1024, 16)?;
    let bound = exact.meta.tail_bound + oracle.quadrature_bound + oracle.tail_bound;
    let dist = exact.state.sup_distance(&oracle.state)?;
    Ok((
        dist <= bound,
        format!("distance {dist:.3e}, bound {bound:.3e}"),
    ))
}

fn approximation_convergence(_cfg: &CheckConfig) -> Result<(bool, String)> {
    let g = fixtures::g2();
    let vel = VelocityProfile::real([(1, 2f64.sqrt()), (2, 3f64.sqrt())])?;
    let edges = [EdgeId(1), EdgeId(2)];
    let schedule = ApproximationSchedule::new(
        &vel,
        &edges,
        vec![2, 3, 4, 5],
        ApproxMethod::ContinuedFraction,
    )?;
    let f = NetworkState::indicator(ratio(1, 4), ratio(3, 4), SparseVector::unit(EdgeId(1)))?;
    let table =
        resolvent_convergence(&g, &vel, Complex64::new(1.0, 0.0), &f, &schedule, 64, 1e-13)?;
    let errs: Vec<f64> = table
        .rows
        .iter()
        .filter_map(|r| r.resolvent_error)
        .collect();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let listed: Vec<String> = errs.iter().map(|e| format!("{e:.3e}")).collect();
    Ok((decreasing, format!("errors {}", listed.join(", "))))
}

fn zero_rate(_cfg: &CheckConfig) -> Result<(bool, String)> {
    let g = fixtures::g5();
    let vel = VelocityProfile::exact([
        (1, int(1)),
        (2, ratio(1, 2)),
        (3, int(2)),
        (4, int(1)),
        (5, int(1)),
    ])?;
    let f = NetworkState::indicator(int(0), ratio(1, 2), SparseVector::unit(EdgeId(1)))?;
    let t = ratio(3, 2);
    let out = evolve_absorbing(&g, &vel, &AbsorptionProfile::zero(), &f, &t, 4, 16, 32)?;
    let plain = evolve_rational(&g, &vel, &f, &t)?.sample(32)?;
    Ok((out.state == plain, "q = 0 against the plain flow".into()))
}

fn constant_rate(_cfg: &CheckConfig) -> Result<(bool, String)> {
    let g = fixtures::g2();
    let unit = VelocityProfile::uniform(int(1))?;
    let f = NetworkState::indicator(int(0), ratio(1, 2), SparseVector::unit(EdgeId(1)))?;
    let q0 = -0.75;
    let t = ratio(1, 2);
    let q = AbsorptionProfile::constant(&[EdgeId(1), EdgeId(2)], q0);
    let out = evolve_absorbing(&g, &unit, &q, &f, &t, 8, 64, 32)?;
    let expected = evolve_unit(&AdjacencyOperator::unscaled(&g)?, &f, &t)?
        .scale(&(q0 * 0.5f64).exp())
        .sample(32)?;
    let err = out.state.sup_distance(&expected)?;
    Ok((
        err <= out.error_bound(),
        format!("error {err:.3e}, bound {:.3e}", out.error_bound()),
    ))
}

fn finite_propagation(_cfg: &CheckConfig) -> Result<(bool, String)> {
    let g = fixtures::bi_infinite_path();
    let op = AdjacencyOperator::unscaled(&g)?;
    let f = NetworkState::indicator(
        ratio(1, 4),
        ratio(3, 4),
        SparseVector::<Rational>::unit(EdgeId(0)),
    )?;
    let out = evolve_unit(&op, &f, &ratio(5, 2))?;
    // After 5/2 the pulse covers [0, 1/4) of edge 2 and [3/4, 1) of edge 3.
    let expected =
        NetworkState::indicator(int(0), ratio(1, 4), SparseVector::unit(EdgeId(2)))?.add(
            &NetworkState::indicator(ratio(3, 4), int(1), SparseVector::unit(EdgeId(3)))?,
        );
    let support = out.support().len();
    Ok((
        out == expected && support <= 4 && !out.total_mass().is_zero(),
        format!("support {support} edges"),
    ))
}
