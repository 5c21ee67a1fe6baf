mod common;

use common::{dense_power, r, riemann_pair, sampled_sup, ExactTracer, UpwindSolver};
use netflow_core::fixtures::{g2, g5};
use netflow_core::randgen::{random_graph, random_state, RandomLimits};
use netflow_core::semigroup::{
    evolve_absorbing, evolve_rational, evolve_unit, subdivide, AbsorptionProfile,
};
use netflow_core::tracing::Tracer;
use netflow_core::{
    AdjacencyOperator, EdgeId, NetworkState, Rational, SparseVector, TestFunction, VelocityProfile,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POINTS: i64 = 1000;

fn unit_on(e: i64) -> SparseVector<Rational> {
    SparseVector::unit(EdgeId(e))
}

fn assert_matches_tracer(
    tracer: &ExactTracer,
    f: &NetworkState<Rational>,
    t: &Rational,
    out: &NetworkState<Rational>,
) {
    for m in 0..POINTS {
        let s = r(m, POINTS);
        assert_eq!(out.eval(&s), &tracer.point(f, &s, t), "s = {s}, t = {t}");
    }
}

#[test]
fn g5_unit_mass_three_quarters() {
    let g = g5();
    let f = NetworkState::constant(unit_on(1));
    let t = r(3, 4);
    let out = evolve_unit(&AdjacencyOperator::unscaled(&g).unwrap(), &f, &t).unwrap();
    assert_matches_tracer(&ExactTracer::unit(&g), &f, &t, &out);
}

#[test]
fn unit_flow_matches_exact_tracer_over_long_times() {
    let g = g5();
    let op = AdjacencyOperator::unscaled(&g).unwrap();
    let tracer = ExactTracer::unit(&g);
    let f = NetworkState::indicator(r(1, 3), r(5, 6), unit_on(1))
        .unwrap()
        .add(&NetworkState::indicator(r(0, 1), r(1, 4), unit_on(4).scale(&r(-2, 1))).unwrap());
    for t in [r(0, 1), r(1, 2), r(7, 3), r(11, 4)] {
        let out = evolve_unit(&op, &f, &t).unwrap();
        assert_matches_tracer(&tracer, &f, &t, &out);
    }
}

#[test]
fn g2_rational_velocities_match_exact_tracer() {
    let g = g2();
    let speed = [(1, r(2, 1)), (2, r(1, 1))];
    let vel = VelocityProfile::exact(speed.iter().cloned()).unwrap();
    let tracer = ExactTracer::new(&g, &speed);
    let f = NetworkState::constant(unit_on(1));
    for t in [r(1, 2), r(5, 4), r(8, 3)] {
        let out = evolve_rational(&g, &vel, &f, &t).unwrap();
        assert_matches_tracer(&tracer, &f, &t, &out);
    }
}

#[test]
fn g5_mixed_velocities_match_exact_tracer() {
    let g = g5();
    let speed = [
        (1, r(1, 1)),
        (2, r(1, 2)),
        (3, r(3, 2)),
        (4, r(2, 3)),
        (5, r(1, 1)),
    ];
    let vel = VelocityProfile::exact(speed.iter().cloned()).unwrap();
    let tracer = ExactTracer::new(&g, &speed);
    let f = NetworkState::indicator(r(0, 1), r(1, 2), unit_on(1))
        .unwrap()
        .add(&NetworkState::indicator(r(1, 5), r(3, 5), unit_on(3)).unwrap());
    for t in [r(2, 5), r(3, 2), r(13, 4)] {
        let out = evolve_rational(&g, &vel, &f, &t).unwrap();
        assert_matches_tracer(&tracer, &f, &t, &out);
    }
}

#[test]
fn uniform_speed_two_is_time_doubling() {
    let g = g2();
    let vel = VelocityProfile::exact([(1, r(2, 1)), (2, r(2, 1))]).unwrap();
    let f = NetworkState::indicator(r(1, 8), r(5, 8), unit_on(1)).unwrap();
    let fast = evolve_rational(&g, &vel, &f, &r(1, 4)).unwrap();
    let slow = evolve_unit(&AdjacencyOperator::unscaled(&g).unwrap(), &f, &r(1, 2)).unwrap();
    assert_eq!(fast, slow);
}

#[test]
fn floating_paths_match_exact_tracer() {
    let g = g5();
    let op = AdjacencyOperator::unscaled(&g).unwrap();
    let tracer = ExactTracer::unit(&g);
    let f = NetworkState::indicator(r(1, 7), r(4, 7), unit_on(2).scale(&r(3, 10))).unwrap();
    let t = r(9, 4);
    let out = evolve_unit(&op, &f.to_f64(), &t).unwrap();
    for m in 0..POINTS {
        let s = r(m, POINTS);
        let expected = tracer
            .point(&f, &s, &t)
            .map(netflow_core::scalar::rational_to_f64);
        let got = out.eval(&s);
        assert!(got.sub(&expected).l1_norm() <= 1e-12, "s = {s}");
    }
}

#[test]
fn float_tracer_matches_exact_tracer() {
    let g = g5();
    let speed = [
        (1, r(1, 1)),
        (2, r(1, 2)),
        (3, r(3, 2)),
        (4, r(2, 3)),
        (5, r(1, 1)),
    ];
    let vel = VelocityProfile::exact(speed.iter().cloned()).unwrap();
    let exact = ExactTracer::new(&g, &speed);
    let tracer = Tracer::new(&g, &vel).unwrap();
    let f = NetworkState::indicator(r(1, 4), r(3, 4), unit_on(1)).unwrap();
    let ff = f.to_f64();
    let t = r(5, 2);
    let traced = tracer.trace_state(&ff, 2.5).unwrap();
    for m in 0..POINTS {
        // Points next to a front are sensitive to rounding in the float tracer.
        let s = r(2 * m + 1, 2 * POINTS);
        let expected = exact
            .point(&f, &s, &t)
            .map(netflow_core::scalar::rational_to_f64);
        let got = traced.eval(netflow_core::scalar::rational_to_f64(&s));
        assert!(got.sub(&expected).l1_norm() <= 1e-12, "s = {s}");
    }
}

#[test]
fn apply_power_matches_dense_power() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..40 {
        let g = random_graph(&mut rng, &RandomLimits::default());
        let ids = g.edge_ids().unwrap();
        let v: Vec<f64> = ids.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n = rng.gen_range(0..15u32);
        let op = AdjacencyOperator::unscaled(&g).unwrap();
        let sparse = op
            .apply_power(
                &SparseVector::from_entries(ids.iter().copied().zip(v.iter().copied())),
                n as u64,
            )
            .unwrap();
        for (e, x) in ids.iter().zip(dense_power(&g, &v, n)) {
            assert!((sparse.get(*e) - x).abs() <= 1e-12);
        }
    }
}

#[test]
fn g5_column_of_e1() {
    let op = AdjacencyOperator::unscaled(&g5()).unwrap();
    let out = op.apply(&unit_on(1)).unwrap();
    assert_eq!(
        out,
        SparseVector::from_entries([(EdgeId(2), r(1, 2)), (EdgeId(3), r(1, 2))])
    );
}

#[test]
fn g2_scaled_entries() {
    let vel = VelocityProfile::exact([(1, r(2, 1)), (2, r(1, 1))]).unwrap();
    let op = AdjacencyOperator::new(&g2(), Some(vel)).unwrap();
    assert_eq!(
        op.apply(&unit_on(1)).unwrap(),
        SparseVector::from_entries([(EdgeId(2), r(2, 1))])
    );
    assert_eq!(
        op.apply(&unit_on(2)).unwrap(),
        SparseVector::from_entries([(EdgeId(1), r(1, 2))])
    );
}

#[test]
fn g2_half_speed_edge_gives_three_cycle() {
    let vel = VelocityProfile::exact([(1, r(1, 2)), (2, r(1, 1))]).unwrap();
    let plan = subdivide(&g2(), &vel).unwrap();
    assert_eq!(plan.sub_edge_count(), 3);
    let sub = plan.subdivided();
    let ids = sub.edge_ids().unwrap();
    for j in &ids {
        let col = sub.column(*j).unwrap();
        assert_eq!(col.len(), 1);
        assert_eq!(col[0].1, r(1, 1));
    }
    let mut e = ids[0];
    let mut seen = vec![e];
    for _ in 0..3 {
        e = sub.column(e).unwrap()[0].0;
        seen.push(e);
    }
    assert_eq!(seen[3], seen[0]);
    seen.truncate(3);
    seen.sort();
    seen.dedup();
    assert_eq!(seen.len(), 3);
}

#[test]
fn g5_half_speed_on_e5_inserts_one_vertex() {
    let vel = VelocityProfile::exact([
        (1, r(1, 1)),
        (2, r(1, 1)),
        (3, r(1, 1)),
        (4, r(1, 1)),
        (5, r(1, 2)),
    ])
    .unwrap();
    let plan = subdivide(&g5(), &vel).unwrap();
    assert_eq!(plan.sub_edge_count(), 6);
    assert_eq!(plan.ell()[&EdgeId(5)], 2);
    let subs = plan.sub_edges(EdgeId(5)).unwrap();
    let sub = plan.subdivided();
    // One of the two halves of e5 feeds only the other, with weight 1.
    let single = |j: EdgeId| {
        sub.column(j).unwrap() == vec![(subs[0], r(1, 1))]
            || sub.column(j).unwrap() == vec![(subs[1], r(1, 1))]
    };
    assert!(single(subs[0]) || single(subs[1]));
    assert!(sub.validate(None).unwrap().passed());
}

#[test]
fn pairing_matches_riemann_sum() {
    let g = NetworkState::indicator(r(0, 1), r(2, 5), unit_on(1))
        .unwrap()
        .add(&NetworkState::indicator(r(2, 5), r(1, 1), unit_on(2).scale(&r(-3, 2))).unwrap());
    let f = NetworkState::indicator(r(1, 4), r(3, 4), unit_on(1).add(&unit_on(2)))
        .unwrap()
        .add(&NetworkState::constant(unit_on(2).scale(&r(1, 5))));
    assert_eq!(f.piece_count(), 3);
    assert_eq!(g.piece_count(), 2);
    let exact = f.pair(&TestFunction::new(g.clone()));
    let oracle = riemann_pair(&f.to_f64(), &TestFunction::new(g.to_f64()), 100_000);
    assert!((netflow_core::scalar::rational_to_f64(&exact) - oracle).abs() <= 1e-6);
}

#[test]
fn random_pairing_matches_riemann_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let limits = RandomLimits {
        max_pieces: 10,
        ..Default::default()
    };
    let edges = [EdgeId(1), EdgeId(2), EdgeId(3)];
    for _ in 0..5 {
        let f = random_state(&mut rng, &edges, &limits);
        let g = TestFunction::new(random_state(&mut rng, &edges, &limits));
        let exact = netflow_core::scalar::rational_to_f64(&f.pair(&g));
        // Each breakpoint perturbs a single cell of the sum.
        let oracle = riemann_pair(
            &f.to_f64(),
            &g.map(netflow_core::scalar::rational_to_f64),
            100_000,
        );
        assert!((exact - oracle).abs() <= 1e-3, "{exact} vs {oracle}");
    }
}

#[test]
fn sup_norm_matches_dense_sampling() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let limits = RandomLimits {
        max_pieces: 10,
        max_denominator: 10,
        ..Default::default()
    };
    let edges = [EdgeId(1), EdgeId(2), EdgeId(3), EdgeId(4)];
    for _ in 0..20 {
        let f = random_state(&mut rng, &edges, &limits).to_f64();
        // Every breakpoint k/q with q <= 10 is a multiple of 1/2520, so the
        // 10^4-point grid hits every piece.
        assert_eq!(f.sup_norm(), sampled_sup(&f, 10_080));
    }
}

#[test]
fn constant_absorption_bound_is_tight_enough() {
    let g = g2();
    let unit = VelocityProfile::uniform(r(1, 1)).unwrap();
    let f = NetworkState::indicator(r(0, 1), r(1, 2), SparseVector::unit(EdgeId(1))).unwrap();
    let t = r(1, 2);
    let q0 = -0.75;
    let q = AbsorptionProfile::constant(&[EdgeId(1), EdgeId(2)], q0);
    let out = evolve_absorbing(&g, &unit, &q, &f, &t, 8, 256, 64).unwrap();
    let expected = evolve_unit(&AdjacencyOperator::unscaled(&g).unwrap(), &f, &t)
        .unwrap()
        .scale(&(q0 * 0.5f64).exp())
        .sample(64)
        .unwrap();
    let err = out.state.sup_distance(&expected).unwrap();
    assert!(out.certified);
    assert!(out.error_bound() <= 1e-6);
    assert!(err <= out.error_bound(), "{err} > {}", out.error_bound());
}

pub fn step_rates() -> AbsorptionProfile {
    AbsorptionProfile::from_edges([
        (
            EdgeId(1),
            vec![r(0, 1), r(1, 2), r(1, 1)],
            vec![-1.0, -0.25],
        ),
        (EdgeId(2), vec![r(0, 1), r(1, 1)], vec![-0.5]),
    ])
    .unwrap()
}

fn step_rate(e: EdgeId, s: f64) -> f64 {
    match (e.0, s < 0.5) {
        (1, true) => -1.0,
        (1, false) => -0.25,
        _ => -0.5,
    }
}

#[test]
fn nonconstant_absorption_matches_upwind_volumes() {
    let g = g2();
    let unit = VelocityProfile::uniform(r(1, 1)).unwrap();
    let f = NetworkState::indicator(r(0, 1), r(1, 2), SparseVector::unit(EdgeId(1)))
        .unwrap()
        .add(&NetworkState::constant(SparseVector::from_entries([(
            EdgeId(2),
            0.5,
        )])));
    let grid = 64;
    let out = evolve_absorbing(&g, &unit, &step_rates(), &f, &r(1, 2), 6, 64, grid).unwrap();
    let solver = UpwindSolver::new(&g, &[(1, 1.0), (2, 1.0)], 10_000);
    let u = solver.run(&f, step_rate, 0.5);
    let mut worst = 0.0f64;
    for m in 0..=grid {
        worst = worst.max(out.state.get(m).sub(&solver.sample(&u, m, grid)).l1_norm());
    }
    assert!(worst <= 1e-3, "{worst}");
}

#[test]
fn upwind_without_absorption_is_the_exact_shift() {
    let g = g5();
    let f = NetworkState::indicator(r(1, 4), r(3, 4), SparseVector::unit(EdgeId(1))).unwrap();
    let solver = UpwindSolver::new(
        &g,
        &[(1, 1.0), (2, 1.0), (3, 1.0), (4, 1.0), (5, 1.0)],
        1000,
    );
    let u = solver.run(&f.to_f64(), |_, _| 0.0, 1.5);
    let exact = evolve_unit(&AdjacencyOperator::unscaled(&g).unwrap(), &f, &r(3, 2))
        .unwrap()
        .to_f64();
    for m in 0..100 {
        let got = solver.sample(&u, m, 100);
        assert!(got.sub(exact.eval_f64(m as f64 / 100.0)).l1_norm() <= 1e-12);
    }
}
