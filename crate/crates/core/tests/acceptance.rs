//! Acceptance run: one PASS/FAIL line per criterion.

mod common;

use common::{r, ExactTracer, UpwindSolver};
use netflow_core::approximation::{
    default_levels, resolvent_convergence, semigroup_convergence, ApproxMethod,
    ApproximationSchedule,
};
use netflow_core::fixtures::{bi_infinite_path, g2, g5};
use netflow_core::randgen::{
    random_graph, random_nonnegative_state, random_state, random_time, random_velocities,
    RandomLimits,
};
use netflow_core::resolvent::{
    laplace_oracle, resolvent_general, resolvent_identity_check, resolvent_unit, ResolventRequest,
};
use netflow_core::scalar::rational_to_f64;
use netflow_core::semigroup::{
    evolve_absorbing, evolve_rational, evolve_unit, AbsorptionProfile, UnitFlow,
};
use netflow_core::tracing::Tracer;
use netflow_core::{
    AdjacencyOperator, EdgeId, MetricGraph, NetworkState, Rational, SparseVector, TestFunction,
    VelocityProfile,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

type Verdict = (bool, String);
type OracleCase = (
    MetricGraph,
    Vec<(i64, Rational)>,
    NetworkState<Rational>,
    Vec<Rational>,
);
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

struct Trial {
    op: AdjacencyOperator,
    f: NetworkState<Rational>,
    t: Rational,
    s: Rational,
}

fn trials(n: usize) -> Vec<Trial> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let limits = RandomLimits::default();
    (0..n)
        .map(|_| {
            let g = random_graph(&mut rng, &limits);
            let edges = g.edge_ids().unwrap();
            Trial {
                op: AdjacencyOperator::unscaled(&g).unwrap(),
                f: random_state(&mut rng, &edges, &limits),
                t: random_time(&mut rng, 3, 12),
                s: random_time(&mut rng, 3, 12),
            }
        })
        .collect()
}

fn unit_on(e: i64) -> SparseVector<Rational> {
    SparseVector::unit(EdgeId(e))
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() < limit
}

fn semigroup_law(trials: &[Trial]) -> Verdict {
    let start = Instant::now();
    let failures = trials
        .iter()
        .filter(|tr| {
            let composed =
                evolve_unit(&tr.op, &evolve_unit(&tr.op, &tr.f, &tr.s).unwrap(), &tr.t).unwrap();
            composed != evolve_unit(&tr.op, &tr.f, &(&tr.t + &tr.s)).unwrap()
        })
        .count();
    let elapsed = start.elapsed();
    (
        failures == 0 && within(elapsed, 10.0),
        format!(
            "{} trials, {failures} mismatches, {:.2} s",
            trials.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn contraction(trials: &[Trial]) -> Verdict {
    let grew = trials
        .iter()
        .filter(|tr| evolve_unit(&tr.op, &tr.f, &tr.t).unwrap().sup_norm() > tr.f.sup_norm())
        .count();
    (
        grew == 0,
        format!("{} trials, {grew} norm increases", trials.len()),
    )
}

fn mass_conservation(trials: &[Trial]) -> Verdict {
    let mut exact_failures = 0;
    let mut drift = 0.0f64;
    for tr in trials {
        if evolve_unit(&tr.op, &tr.f, &tr.t).unwrap().total_mass() != tr.f.total_mass() {
            exact_failures += 1;
        }
        let ff = tr.f.to_f64();
        drift = drift
            .max((evolve_unit(&tr.op, &ff, &tr.t).unwrap().total_mass() - ff.total_mass()).abs());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let limits = RandomLimits {
        max_edges: 6,
        max_pieces: 4,
        ..Default::default()
    };
    for _ in 0..50 {
        let g = random_graph(&mut rng, &limits);
        let edges = g.edge_ids().unwrap();
        let vel = random_velocities(&mut rng, &edges);
        let f = random_state(&mut rng, &edges, &limits).to_f64();
        let t = random_time(&mut rng, 3, 12);
        drift = drift
            .max((evolve_rational(&g, &vel, &f, &t).unwrap().total_mass() - f.total_mass()).abs());
    }
    let irrational = VelocityProfile::real([(1, 2f64.sqrt()), (2, 3f64.sqrt())]).unwrap();
    let tracer = Tracer::new(&g2(), &irrational).unwrap();
    let f = NetworkState::indicator(r(1, 4), r(3, 4), unit_on(1))
        .unwrap()
        .to_f64();
    for t in [0.5, 1.0, 2.75] {
        drift = drift.max((tracer.trace_state(&f, t).unwrap().total_mass() - f.total_mass()).abs());
    }
    (
        exact_failures == 0 && drift <= 1e-12,
        format!("exact path {exact_failures} changes, floating drift {drift:.2e}"),
    )
}

fn oracle_cases() -> Vec<OracleCase> {
    let unit2 = vec![(1, r(1, 1)), (2, r(1, 1))];
    let unit5: Vec<(i64, Rational)> = (1..=5).map(|e| (e, r(1, 1))).collect();
    let pulse = NetworkState::indicator(r(1, 4), r(3, 4), unit_on(1))
        .unwrap()
        .add(&NetworkState::indicator(r(0, 1), r(1, 3), unit_on(2).scale(&r(-1, 2))).unwrap());
    vec![
        (g2(), unit2, pulse.clone(), vec![r(1, 2), r(7, 3), r(3, 1)]),
        (
            g5(),
            unit5,
            NetworkState::constant(unit_on(1)),
            vec![r(3, 4), r(5, 2)],
        ),
        (
            g2(),
            vec![(1, r(2, 1)), (2, r(1, 1))],
            NetworkState::constant(unit_on(1)),
            vec![r(1, 2), r(9, 4)],
        ),
        (
            g5(),
            vec![
                (1, r(1, 1)),
                (2, r(1, 2)),
                (3, r(3, 2)),
                (4, r(2, 3)),
                (5, r(1, 1)),
            ],
            pulse,
            vec![r(2, 5), r(13, 4)],
        ),
    ]
}

fn tracing_oracle() -> Verdict {
    let start = Instant::now();
    let mut exact_mismatches = 0;
    let mut float_error = 0.0f64;
    let mut points = 0;
    for (g, speed, f, times) in oracle_cases() {
        let tracer = ExactTracer::new(&g, &speed);
        let vel = VelocityProfile::exact(speed.iter().cloned()).unwrap();
        let unit = speed.iter().all(|(_, c)| *c == r(1, 1));
        let op = AdjacencyOperator::unscaled(&g).unwrap();
        let ff = f.to_f64();
        for t in times {
            let (exact, float) = if unit {
                (
                    evolve_unit(&op, &f, &t).unwrap(),
                    evolve_unit(&op, &ff, &t).unwrap(),
                )
            } else {
                (
                    evolve_rational(&g, &vel, &f, &t).unwrap(),
                    evolve_rational(&g, &vel, &ff, &t).unwrap(),
                )
            };
            for m in 0..1000 {
                let s = r(m, 1000);
                let expected = tracer.point(&f, &s, &t);
                if exact.eval(&s) != &expected {
                    exact_mismatches += 1;
                }
                let diff = float.eval(&s).sub(&expected.map(rational_to_f64)).l1_norm();
                float_error = float_error.max(diff);
                points += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    (
        exact_mismatches == 0 && float_error <= 1e-12 && within(elapsed, 5.0),
        format!(
            "{points} points, {exact_mismatches} exact mismatches, floating error {float_error:.2e}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn two_edge_load(g: &MetricGraph) -> NetworkState<f64> {
    let other = if g.edge_count() == Some(2) { 2 } else { 4 };
    NetworkState::indicator(r(0, 1), r(1, 3), SparseVector::unit(EdgeId(1)))
        .unwrap()
        .add(&NetworkState::constant(SparseVector::from_entries([(
            EdgeId(other),
            0.5,
        )])))
}

fn lambdas() -> [Complex64; 3] {
    [
        Complex64::new(1.0, 0.0),
        Complex64::new(2.0, 0.0),
        Complex64::new(1.0, 1.0),
    ]
}

fn laplace_duality() -> Verdict {
    let start = Instant::now();
    let mut ok = true;
    let mut worst_bound = 0.0f64;
    let mut worst_ratio = 0.0f64;
    for g in [g2(), g5()] {
        let op = AdjacencyOperator::unscaled(&g).unwrap();
        let f = two_edge_load(&g);
        let flow = UnitFlow::new(op.clone()).unwrap();
        for lambda in lambdas() {
            let exact = resolvent_unit(&op, &f, &ResolventRequest::new(lambda, 1e-12, 32)).unwrap();
            let oracle = laplace_oracle(&flow, lambda, &f, &r(12, 1), 4096, 32).unwrap();
            let bound = exact.meta.tail_bound + oracle.quadrature_bound + oracle.tail_bound;
            let dist = exact.state.sup_distance(&oracle.state).unwrap();
            ok &= dist <= bound && bound <= 1e-3;
            worst_bound = worst_bound.max(bound);
            worst_ratio = worst_ratio.max(dist / bound);
        }
    }
    let elapsed = start.elapsed();
    (
        ok && within(elapsed, 30.0),
        format!(
            "largest bound {worst_bound:.2e}, largest distance/bound {worst_ratio:.3}, {:.2} s",
            elapsed.as_secs_f64()
        ),
    )
}

fn unit_vs_general() -> Verdict {
    let unit = VelocityProfile::uniform(r(1, 1)).unwrap();
    let mut worst = 0.0f64;
    let mut cases: Vec<(MetricGraph, NetworkState<f64>)> = [g2(), g5()]
        .into_iter()
        .map(|g| (g.clone(), two_edge_load(&g)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let limits = RandomLimits::default();
    for _ in 0..30 {
        let g = random_graph(&mut rng, &limits);
        let edges = g.edge_ids().unwrap();
        let f = random_state(&mut rng, &edges, &limits).to_f64();
        cases.push((g, f));
    }
    for (g, f) in &cases {
        let op = AdjacencyOperator::unscaled(g).unwrap();
        for lambda in lambdas().into_iter().chain([Complex64::new(0.5, -2.0)]) {
            let req = ResolventRequest::new(lambda, 1e-13, 64);
            let a = resolvent_unit(&op, f, &req).unwrap();
            let b = resolvent_general(g, &unit, f, &req).unwrap();
            worst = worst.max(a.state.sup_distance(&b.state).unwrap());
        }
    }
    (
        worst <= 1e-10,
        format!("{} graphs, max distance {worst:.2e}", cases.len()),
    )
}

fn positivity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let limits = RandomLimits::default();
    let mut lowest = f64::INFINITY;
    let mut excess = f64::NEG_INFINITY;
    for _ in 0..100 {
        let g = random_graph(&mut rng, &limits);
        let edges = g.edge_ids().unwrap();
        let f = random_nonnegative_state(&mut rng, &edges, &limits).to_f64();
        let lambda: f64 = rng.gen_range(0.25..4.0);
        let req = ResolventRequest::new(Complex64::new(lambda, 0.0), 1e-13, 64);
        let out = resolvent_unit(&AdjacencyOperator::unscaled(&g).unwrap(), &f, &req).unwrap();
        for v in out.state.samples() {
            for (_, x) in v.iter() {
                lowest = lowest.min(x.re);
            }
        }
        excess = excess.max(out.state.sup_norm() - f.sup_norm() / lambda);
    }
    (
        lowest >= -1e-14 && excess <= 1e-10,
        format!("100 trials, min value {lowest:.2e}, max excess over ||f||/lambda {excess:.2e}"),
    )
}

fn identity_residual() -> Verdict {
    let mut worst_ratio = f64::INFINITY;
    let mut worst_trace = 0.0f64;
    for g in [g2(), g5()] {
        let op = AdjacencyOperator::unscaled(&g).unwrap();
        let f = NetworkState::indicator(r(1, 4), r(1, 2), SparseVector::unit(EdgeId(1)))
            .unwrap()
            .add(&two_edge_load(&g));
        for lambda in lambdas() {
            let check = |m: usize| {
                let out =
                    resolvent_unit(&op, &f, &ResolventRequest::new(lambda, 1e-14, m)).unwrap();
                resolvent_identity_check(&op, lambda, &f, &out.state).unwrap()
            };
            let runs: Vec<_> = [256, 512, 1024].into_iter().map(check).collect();
            for w in runs.windows(2) {
                worst_ratio = worst_ratio.min(w[0].interior_residual / w[1].interior_residual);
            }
            worst_trace = worst_trace.max(check(4096).trace_residual);
        }
    }
    (
        worst_ratio >= 3.5 && worst_trace <= 1e-8,
        format!(
            "smallest halving ratio {worst_ratio:.3}, trace residual at M=4096 {worst_trace:.2e}"
        ),
    )
}

fn trotter_kato() -> Verdict {
    let start = Instant::now();
    let g = g2();
    let edges = [EdgeId(1), EdgeId(2)];
    let vel = VelocityProfile::real([(1, 2f64.sqrt()), (2, 3f64.sqrt())]).unwrap();
    let schedule = ApproximationSchedule::new(
        &vel,
        &edges,
        default_levels(),
        ApproxMethod::ContinuedFraction,
    )
    .unwrap();
    let f = NetworkState::indicator(r(1, 4), r(3, 4), SparseVector::unit(EdgeId(1)))
        .unwrap()
        .add(
            &NetworkState::indicator(
                r(0, 1),
                r(1, 3),
                SparseVector::from_entries([(EdgeId(2), 2.0)]),
            )
            .unwrap(),
        );
    let gs = vec![
        TestFunction::new(NetworkState::constant(SparseVector::unit(EdgeId(1)))),
        TestFunction::new(
            NetworkState::indicator(
                r(1, 3),
                r(1, 1),
                SparseVector::from_entries([(EdgeId(1), 0.5), (EdgeId(2), 1.0)]),
            )
            .unwrap(),
        ),
    ];
    let semigroup = semigroup_convergence(&g, &vel, &f, &r(1, 1), &gs, &schedule).unwrap();
    let resolvent =
        resolvent_convergence(&g, &vel, Complex64::new(1.0, 0.0), &f, &schedule, 64, 1e-13)
            .unwrap();
    let elapsed = start.elapsed();

    let res: Vec<f64> = resolvent
        .rows
        .iter()
        .filter_map(|row| row.resolvent_error)
        .collect();
    let res_ok = res.len() == 6 && res.windows(2).all(|w| w[1] < w[0]) && res[5] <= 1e-4;
    let weak_ok = (0..gs.len()).all(|k| {
        semigroup
            .rows
            .windows(2)
            .all(|w| w[1].weak_errors[k] < w[0].weak_errors[k])
    });
    let holder = semigroup.holder_holds(&gs, 1e-12);
    let listed: Vec<String> = res.iter().map(|e| format!("{e:.2e}")).collect();
    (
        res_ok && weak_ok && holder && within(elapsed, 60.0),
        format!(
            "resolvent errors [{}], weak decreasing {weak_ok}, Holder {holder}, {:.2} s",
            listed.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn step_rate(e: EdgeId, s: f64) -> f64 {
    match (e.0, s < 0.5) {
        (1, true) => -1.0,
        (1, false) => -0.25,
        _ => -0.5,
    }
}

fn dyson_phillips() -> Verdict {
    let g = g2();
    let unit = VelocityProfile::uniform(r(1, 1)).unwrap();
    let op = AdjacencyOperator::unscaled(&g).unwrap();
    let f = NetworkState::indicator(r(0, 1), r(1, 2), SparseVector::unit(EdgeId(1)))
        .unwrap()
        .add(&NetworkState::constant(SparseVector::from_entries([(
            EdgeId(2),
            0.5,
        )])));
    let t = r(1, 2);

    let q0 = -0.75;
    let constant = AbsorptionProfile::constant(&[EdgeId(1), EdgeId(2)], q0);
    let out = evolve_absorbing(&g, &unit, &constant, &f, &t, 8, 256, 64).unwrap();
    let expected = evolve_unit(&op, &f, &t)
        .unwrap()
        .scale(&(q0 * 0.5f64).exp())
        .sample(64)
        .unwrap();
    let const_err = out.state.sup_distance(&expected).unwrap();
    let const_ok = const_err <= out.error_bound() && out.error_bound() <= 1e-6;

    let g5 = g5();
    let mixed = VelocityProfile::exact([
        (1, r(1, 1)),
        (2, r(1, 2)),
        (3, r(2, 1)),
        (4, r(1, 1)),
        (5, r(1, 1)),
    ])
    .unwrap();
    let pulse = NetworkState::indicator(r(0, 1), r(1, 2), SparseVector::unit(EdgeId(1))).unwrap();
    let zero = evolve_absorbing(
        &g5,
        &mixed,
        &AbsorptionProfile::zero(),
        &pulse,
        &r(3, 2),
        4,
        16,
        64,
    )
    .unwrap();
    let zero_ok = zero.state
        == evolve_rational(&g5, &mixed, &pulse, &r(3, 2))
            .unwrap()
            .sample(64)
            .unwrap();

    let steps = AbsorptionProfile::from_edges([
        (
            EdgeId(1),
            vec![r(0, 1), r(1, 2), r(1, 1)],
            vec![-1.0, -0.25],
        ),
        (EdgeId(2), vec![r(0, 1), r(1, 1)], vec![-0.5]),
    ])
    .unwrap();
    let grid = 64;
    let absorbed = evolve_absorbing(&g, &unit, &steps, &f, &t, 6, 64, grid).unwrap();
    let solver = UpwindSolver::new(&g, &[(1, 1.0), (2, 1.0)], 10_000);
    let cells = solver.run(&f, step_rate, 0.5);
    let fv_err = (0..=grid)
        .map(|m| {
            absorbed
                .state
                .get(m)
                .sub(&solver.sample(&cells, m, grid))
                .l1_norm()
        })
        .fold(0.0, f64::max);

    (
        const_ok && zero_ok && fv_err <= 1e-3,
        format!(
            "constant q error {const_err:.2e} <= bound {:.2e}, q = 0 exact {zero_ok}, step q vs finite volumes {fv_err:.2e}",
            out.error_bound()
        ),
    )
}

fn finite_propagation() -> Verdict {
    let op = AdjacencyOperator::unscaled(&bi_infinite_path()).unwrap();
    let f = NetworkState::indicator(r(1, 4), r(3, 4), unit_on(0)).unwrap();
    let out = evolve_unit(&op, &f, &r(5, 2)).unwrap();
    let expected = NetworkState::indicator(r(0, 1), r(1, 4), unit_on(2))
        .unwrap()
        .add(&NetworkState::indicator(r(3, 4), r(1, 1), unit_on(3)).unwrap());
    let support = out.support().len();
    (
        support <= 4 && out == expected,
        format!(
            "support {support} edges, translate exact {}",
            out == expected
        ),
    )
}

fn main() {
    let start = Instant::now();
    let shared = trials(500);
    let criteria: Vec<Criterion> = vec![
        ("semigroup law", Box::new(|| semigroup_law(&shared))),
        ("contraction", Box::new(|| contraction(&shared))),
        ("mass conservation", Box::new(|| mass_conservation(&shared))),
        ("tracing oracle", Box::new(tracing_oracle)),
        ("resolvent and Laplace transform", Box::new(laplace_duality)),
        ("unit and general resolvents", Box::new(unit_vs_general)),
        ("resolvent positivity and norm", Box::new(positivity)),
        ("resolvent identity", Box::new(identity_residual)),
        ("Trotter-Kato convergence", Box::new(trotter_kato)),
        ("Dyson-Phillips expansion", Box::new(dyson_phillips)),
        (
            "finite propagation on the lazy path",
            Box::new(finite_propagation),
        ),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let (passed, detail) = run();
        if !passed {
            failed += 1;
        }
        println!(
            "{} [{:>2}] {name}: {detail}",
            if passed { "PASS" } else { "FAIL" },
            k + 1
        );
    }
    println!(
        "{} of {} criteria passed in {:.2} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
