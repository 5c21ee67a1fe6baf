//! Fixtures shipped inside the binary, addressable as `fixture:<name>`.

use crate::exit::{Failure, Outcome};
use netflow_core::checks::CheckOutcome;
use netflow_core::io::{parse_graph, parse_states, write_csv};
use netflow_core::scalar::ratio;
use netflow_core::semigroup::evolve_unit;
use netflow_core::AdjacencyOperator;
use std::path::Path;

pub const FIXTURES: &[(&str, &str)] = &[
    ("g2.graph", include_str!("../fixtures/g2.graph")),
    ("g5.graph", include_str!("../fixtures/g5.graph")),
    (
        "g2_rational.graph",
        include_str!("../fixtures/g2_rational.graph"),
    ),
    (
        "g2_irrational.graph",
        include_str!("../fixtures/g2_irrational.graph"),
    ),
    ("unit_e1.state", include_str!("../fixtures/unit_e1.state")),
    ("pulse.state", include_str!("../fixtures/pulse.state")),
    (
        "rates_step.state",
        include_str!("../fixtures/rates_step.state"),
    ),
    ("tests_g2.state", include_str!("../fixtures/tests_g2.state")),
];

/// `T(1/2)` of `unit_e1` on G2 sampled at `M = 4`.
const G2_HALF: &str = include_str!("../fixtures/g2_unit_e1_t_half.csv");

/// Reads a file, or a shipped fixture when the path is `fixture:<name>`.
pub fn load(path: &Path) -> Outcome<(String, String)> {
    let shown = path.display().to_string();
    if let Some(name) = shown.strip_prefix("fixture:") {
        let text = FIXTURES
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| t.to_string())
            .ok_or_else(|| Failure::Input(format!("no shipped fixture named `{name}`")))?;
        return Ok((shown, text));
    }
    let text =
        std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{shown}: {e}")))?;
    Ok((shown, text))
}

fn outcome(name: &str, result: netflow_core::Result<(bool, String)>) -> CheckOutcome {
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    CheckOutcome {
        suite: "fixtures".into(),
        name: name.into(),
        passed,
        detail,
    }
}

/// Re-parses and re-validates every shipped fixture.
pub fn revalidate() -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    for (name, text) in FIXTURES {
        let result = if name.ends_with(".graph") {
            parse_graph(name, text).and_then(|f| {
                let report = f.graph.validate(None)?;
                Ok((report.passed(), report.summary()))
            })
        } else {
            parse_states(name, text).map(|s| (true, format!("{} state block(s)", s.len())))
        };
        out.push(outcome(name, result));
    }
    let reference = (|| {
        let g = parse_graph("g2.graph", FIXTURES[0].1)?.graph;
        let f = parse_states("unit_e1.state", FIXTURES[4].1)?.remove(0).1;
        let out = evolve_unit(&AdjacencyOperator::unscaled(&g)?, &f, &ratio(1, 2))?;
        let csv = write_csv(&out.sample(4)?, &g.edge_ids().unwrap_or_default())?;
        Ok((
            csv == G2_HALF,
            "simulate G2 at t = 1/2 against the stored CSV".to_string(),
        ))
    })();
    out.push(outcome("g2_unit_e1_t_half.csv", reference));
    out
}
