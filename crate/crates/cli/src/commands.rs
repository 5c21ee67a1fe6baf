use crate::args::{
    AbsorbArgs, ApproxArgs, CheckArgs, MethodArg, ResolventArgs, ResolventMode, SimulateArgs,
    ValidateArgs,
};
use crate::artifacts::{Artifacts, LogEntry, Metadata};
use crate::exit::{Failure, Outcome};
use crate::fixtures;
use netflow_core::approximation::{
    default_levels, merge_tables, resolvent_convergence, semigroup_convergence, ApproxMethod,
    ApproximationSchedule, ConvergenceTable,
};
use netflow_core::checks::{run_suite, CheckConfig, Suite};
use netflow_core::io::{format_f64, parse_graph, parse_states, write_csv, GraphFile};
use netflow_core::resolvent::{
    resolvent_general, resolvent_identity_check, resolvent_unit, ResolventRequest,
};
use netflow_core::scalar::{int, parse_exact, rational_to_f64};
use netflow_core::semigroup::{evolve_absorbing, evolve_rational, evolve_unit, AbsorptionProfile};
use netflow_core::{
    AdjacencyOperator, EdgeId, MetricGraph, NetworkState, Rational, SparseVector, TestFunction,
    VelocityProfile,
};
use num_complex::Complex64;
use serde_json::json;
use std::path::Path;

fn load_graph(path: &Path) -> Outcome<GraphFile> {
    let (name, text) = fixtures::load(path)?;
    Ok(parse_graph(&name, &text)?)
}

fn load_states(path: &Path) -> Outcome<Vec<(String, NetworkState<Rational>)>> {
    let (name, text) = fixtures::load(path)?;
    Ok(parse_states(&name, &text)?)
}

fn load_state(path: &Path) -> Outcome<NetworkState<Rational>> {
    let mut all = load_states(path)?;
    if all.len() != 1 {
        return Err(Failure::Input(format!(
            "{}: expected one state block, found {}",
            path.display(),
            all.len()
        )));
    }
    Ok(all.remove(0).1)
}

fn parse_time(s: &str) -> Outcome<Rational> {
    let t = parse_exact(s).map_err(|e| Failure::Input(format!("--t: {e}")))?;
    if t < int(0) {
        return Err(Failure::Input(format!("--t must be nonnegative, got {t}")));
    }
    Ok(t)
}

fn parse_lambda(s: &str) -> Outcome<Complex64> {
    let bad = || Failure::Input(format!("--lambda expects `re` or `re,im`, got `{s}`"));
    let mut parts = s.split(',');
    let re: f64 = parts
        .next()
        .ok_or_else(bad)?
        .trim()
        .parse()
        .map_err(|_| bad())?;
    let im: f64 = match parts.next() {
        Some(p) => p.trim().parse().map_err(|_| bad())?,
        None => 0.0,
    };
    if parts.next().is_some() {
        return Err(bad());
    }
    Ok(Complex64::new(re, im))
}

fn edges_of(g: &MetricGraph) -> Vec<EdgeId> {
    g.edge_ids().unwrap_or_default()
}

/// Exact velocities for the flow, or `None` when every edge has speed one.
fn exact_velocities(file: &GraphFile, verb: &str) -> Outcome<Option<VelocityProfile>> {
    match &file.velocities {
        None => Ok(None),
        Some(v) if v.is_unit_on(&edges_of(&file.graph)) => Ok(None),
        Some(v) if v.is_exact() => {
            v.covers(&edges_of(&file.graph))?;
            Ok(Some(v.clone()))
        }
        Some(_) => Err(Failure::Input(format!(
            "{verb} needs exact velocities (p/q); floating velocities are handled by `approx`"
        ))),
    }
}

fn times(t: &Rational, steps: usize) -> Vec<Rational> {
    let steps = steps.max(1) as i64;
    (0..=steps)
        .map(|k| t * Rational::new(k.into(), steps.into()))
        .collect()
}

pub fn simulate(args: &SimulateArgs) -> Outcome {
    let file = load_graph(&args.graph)?;
    let f = load_state(&args.state)?;
    let t = parse_time(&args.t)?;
    let g = &file.graph;
    let vel = exact_velocities(&file, "simulate")?;
    let op = AdjacencyOperator::new(g, vel.clone())?;
    let evolve = |s: &Rational| -> Outcome<NetworkState<Rational>> {
        Ok(match &vel {
            None => evolve_unit(&op, &f, s)?,
            Some(v) => evolve_rational(g, v, &f, s)?,
        })
    };
    let mut log = Vec::new();
    let mut last = None;
    for tk in times(&t, args.log_steps) {
        let state = evolve(&tk)?;
        log.push(LogEntry {
            t: rational_to_f64(&tk),
            t_exact: tk.to_string(),
            sup_norm: rational_to_f64(&state.sup_norm()),
            total_mass: rational_to_f64(&state.total_mass()),
            boundary_residual: rational_to_f64(&state.boundary_residual(&op)?),
        });
        last = Some(state);
    }
    let state = last.expect("at least one time");
    let mut out = Artifacts::new(&args.out, "simulate")?;
    out.csv(&write_csv(&state.sample(args.grid)?, &edges_of(g))?)?;
    let bounds = json!({
        "path": if vel.is_none() { "exact-unit" } else { "exact-rational" },
        "error_bound": 0.0,
        "pieces": state.piece_count(),
        "mass_drift": rational_to_f64(&(state.total_mass() - f.total_mass())),
    });
    out.metadata(&Metadata::new("simulate", args, bounds))?;
    out.log(&log)?;
    out.report();
    Ok(())
}

pub fn absorb(args: &AbsorbArgs) -> Outcome {
    let file = load_graph(&args.graph)?;
    let f = load_state(&args.state)?.to_f64();
    let rates = AbsorptionProfile::new(load_state(&args.rates)?.to_f64());
    let t = parse_time(&args.t)?;
    let g = &file.graph;
    let vel = exact_velocities(&file, "absorb")?.unwrap_or(VelocityProfile::uniform(int(1))?);
    let op = AdjacencyOperator::new(g, Some(vel.clone()))?;
    let mut log = Vec::new();
    let mut last = None;
    for tk in times(&t, args.log_steps) {
        let run = evolve_absorbing(
            g,
            &vel,
            &rates,
            &f,
            &tk,
            args.order,
            args.quad_steps,
            args.grid,
        )?;
        log.push(LogEntry {
            t: rational_to_f64(&tk),
            t_exact: tk.to_string(),
            sup_norm: run.exact_state.sup_norm(),
            total_mass: run.exact_state.total_mass(),
            boundary_residual: run.exact_state.boundary_residual(&op)?,
        });
        last = Some(run);
    }
    let run = last.expect("at least one time");
    let mut out = Artifacts::new(&args.out, "absorb")?;
    out.csv(&write_csv(&run.state, &edges_of(g))?)?;
    let bounds = json!({
        "tail_bound": run.tail_bound,
        "quadrature_estimate": run.quadrature_estimate,
        "error_bound": run.error_bound(),
        "certified": run.certified,
        "series": run.report,
    });
    out.metadata(&Metadata::new("absorb", args, bounds))?;
    out.log(&log)?;
    out.report();
    Ok(())
}

pub fn resolvent(args: &ResolventArgs) -> Outcome {
    let file = load_graph(&args.graph)?;
    let f = load_state(&args.state)?.to_f64();
    let lambda = parse_lambda(&args.lambda)?;
    let g = &file.graph;
    let edges = edges_of(g);
    let req = ResolventRequest::new(lambda, args.tol, args.grid);
    let (output, op) = match args.mode {
        ResolventMode::Unit => {
            if file
                .velocities
                .as_ref()
                .is_some_and(|v| !v.is_unit_on(&edges))
            {
                return Err(Failure::Input(
                    "--mode unit needs unit velocities; use --mode general".into(),
                ));
            }
            let op = AdjacencyOperator::unscaled(g)?;
            (resolvent_unit(&op, &f, &req)?, op)
        }
        ResolventMode::General => {
            let vel = match &file.velocities {
                Some(v) => v.clone(),
                None => VelocityProfile::uniform(int(1))?,
            };
            let op = AdjacencyOperator::new(g, Some(vel.clone()))?;
            (resolvent_general(g, &vel, &f, &req)?, op)
        }
    };
    let identity = if args.grid >= 2 {
        Some(resolvent_identity_check(&op, lambda, &f, &output.state)?)
    } else {
        None
    };
    let mut out = Artifacts::new(&args.out, "resolvent")?;
    out.csv(&write_csv(&output.state, &edges)?)?;
    let bounds = json!({
        "resolvent": output.meta,
        "trace_residual": identity.as_ref().map(|r| r.trace_residual),
        "interior_residual": identity.as_ref().map(|r| r.interior_residual),
    });
    out.metadata(&Metadata::new("resolvent", args, bounds))?;
    out.report();
    Ok(())
}

fn table_csv(table: &ConvergenceTable, names: &[String]) -> String {
    let mut text =
        String::from("level,velocity_error,sub_edges,strong_semigroup_error,resolvent_error");
    for n in names {
        text.push_str(&format!(",weak_{n}"));
    }
    text.push('\n');
    let opt = |x: Option<f64>| x.map(format_f64).unwrap_or_default();
    for row in &table.rows {
        text.push_str(&format!(
            "{},{},{},{},{}",
            row.level,
            format_f64(row.velocity_error),
            row.sub_edges.map(|n| n.to_string()).unwrap_or_default(),
            opt(row.strong_semigroup_error),
            opt(row.resolvent_error),
        ));
        for w in &row.weak_errors {
            text.push(',');
            text.push_str(&format_f64(*w));
        }
        text.push('\n');
    }
    text
}

fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

pub fn approx(args: &ApproxArgs) -> Outcome {
    let file = load_graph(&args.graph)?;
    let g = &file.graph;
    let edges = edges_of(g);
    let vel = file
        .velocities
        .clone()
        .ok_or_else(|| Failure::Input("approx needs `c` lines in the graph file".into()))?;
    let f = load_state(&args.state)?.to_f64();
    let t = parse_time(&args.t)?;
    let lambda = parse_lambda(&args.lambda)?;
    let (names, gs): (Vec<String>, Vec<TestFunction<f64>>) = match &args.tests {
        Some(path) => load_states(path)?
            .into_iter()
            .map(|(n, s)| (n, TestFunction::new(s.to_f64())))
            .unzip(),
        None => edges
            .iter()
            .map(|e| {
                (
                    format!("e{e}"),
                    TestFunction::new(NetworkState::constant(SparseVector::unit(*e))),
                )
            })
            .unzip(),
    };
    let method = match args.method {
        MethodArg::Cf => ApproxMethod::ContinuedFraction,
        MethodArg::Dec => ApproxMethod::Decimal,
    };
    let levels = if args.levels.is_empty() {
        default_levels()
    } else {
        args.levels.clone()
    };
    let schedule = ApproximationSchedule::new(&vel, &edges, levels, method)?;
    let semigroup = semigroup_convergence(g, &vel, &f, &t, &gs, &schedule)?;
    let resolvent = resolvent_convergence(g, &vel, lambda, &f, &schedule, args.grid, args.tol)?;
    let table = merge_tables(semigroup, &resolvent);

    let res_errors: Vec<f64> = table
        .rows
        .iter()
        .filter_map(|r| r.resolvent_error)
        .collect();
    let weak_trend: Vec<bool> = (0..gs.len())
        .map(|k| {
            let col: Vec<f64> = table.rows.iter().map(|r| r.weak_errors[k]).collect();
            col.windows(2).all(|w| w[1] <= w[0])
        })
        .collect();
    let mut out = Artifacts::new(&args.out, "approx")?;
    out.csv(&table_csv(&table, &names))?;
    let bounds = json!({
        "test_functions": names,
        "resolvent_strictly_decreasing": strictly_decreasing(&res_errors),
        "weak_nonincreasing": weak_trend,
        "holder_bound_holds": table.holder_holds(&gs, 1e-12),
        "lipschitz_fit": table.lipschitz,
        "rows": table.rows,
    });
    out.metadata(&Metadata::new("approx", args, bounds))?;
    out.report();
    Ok(())
}

pub fn check(args: &CheckArgs) -> Outcome {
    let suite: Suite = args.suite.parse()?;
    let cfg = CheckConfig {
        seed: args.seed,
        trials: args.trials,
    };
    let fixtures = fixtures::revalidate();
    let report = run_suite(suite, &cfg);
    for o in fixtures.iter().chain(&report.outcomes) {
        let mark = if o.passed { "PASS" } else { "FAIL" };
        println!("{mark} {}/{}: {}", o.suite, o.name, o.detail);
    }
    if let Some(dir) = &args.out {
        let mut out = Artifacts::new(dir, "check")?;
        let bounds = json!({ "fixtures": fixtures, "report": report });
        out.metadata(&Metadata::new("check", args, bounds))?;
        out.report();
    }
    if let Some(bad) = fixtures.iter().find(|o| !o.passed) {
        return Err(Failure::Validation(format!(
            "fixture {}: {}",
            bad.name, bad.detail
        )));
    }
    if let Some(bad) = report.outcomes.iter().find(|o| !o.passed) {
        return Err(Failure::Numeric(format!(
            "{}/{}: {}",
            bad.suite, bad.name, bad.detail
        )));
    }
    Ok(())
}

pub fn validate(args: &ValidateArgs) -> Outcome {
    let file = load_graph(&args.graph)?;
    let report = file.graph.validate(None)?;
    println!("{}: {}", file.graph.name(), report.summary());
    if let Some(dir) = &args.out {
        let mut out = Artifacts::new(dir, "validate")?;
        out.metadata(&Metadata::new("validate", args, &report))?;
        out.report();
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Validation(report.summary()))
    }
}
