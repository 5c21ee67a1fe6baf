use crate::error::{Error, Result};
use crate::graph::SparseVector;
use crate::scalar::{int, rational_to_f64, Rational};
use crate::semigroup::ExactEvolver;
use crate::state::{NetworkState, SampledState};
use num_complex::Complex64;
use num_traits::Signed;
use rayon::prelude::*;
use std::collections::BTreeSet;

/// Output of [`laplace_oracle`].
#[derive(Clone, Debug)]
pub struct LaplaceOutput {
    pub state: SampledState<Complex64>,
    /// Bound on the trapezoid error, maximised over samples.
    pub quadrature_bound: f64,
    /// `e^{-Re(lambda) T_max} / Re(lambda) * sup_norm(f)`.
    pub tail_bound: f64,
    /// Number of panels after splitting at jump times.
    pub panels: usize,
}

/// `int_0^{T_max} e^{-lambda t} T(t) f dt` at the samples `s = m / M`.
///
/// The uniform grid of `steps` panels is refined by the times at which the
/// sampled values can jump, so `T(t) f (s)` is constant on every open panel
/// and is taken at the panel midpoint. Only the exponential is then
/// integrated by the trapezoid rule, whose error on `[a, b]` is at most
/// `(b - a)^3 / 12 * |lambda|^2 e^{-Re(lambda) a} ||T(mid) f (s)||_1`.
pub fn laplace_oracle<E: ExactEvolver>(
    evolver: &E,
    lambda: Complex64,
    f: &NetworkState<f64>,
    t_max: &Rational,
    steps: usize,
    grid: usize,
) -> Result<LaplaceOutput> {
    if lambda.re.is_nan() || lambda.re <= 0.0 {
        return Err(Error::Domain(format!(
            "Laplace transform needs Re(lambda) > 0, got {lambda}"
        )));
    }
    if !t_max.is_positive() || steps == 0 || grid == 0 {
        return Err(Error::Argument(
            "need T_max > 0, steps >= 1 and M >= 1".into(),
        ));
    }
    let samples: Vec<Rational> = (0..=grid)
        .map(|m| Rational::new((m as i64).into(), (grid as i64).into()))
        .collect();
    let mut nodes: BTreeSet<Rational> = (0..=steps)
        .map(|k| t_max * Rational::new((k as i64).into(), (steps as i64).into()))
        .collect();
    for s in &samples {
        nodes.extend(evolver.jump_times(f, s, t_max)?);
    }
    let nodes: Vec<Rational> = nodes.into_iter().filter(|t| t <= t_max).collect();
    let two = int(2);

    let contributions: Vec<(Vec<SparseVector<Complex64>>, f64)> = nodes
        .par_windows(2)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let mid = (a + b) / &two;
            let state = evolver.evolve(f, &mid)?;
            let (af, bf) = (rational_to_f64(a), rational_to_f64(b));
            let h = bf - af;
            let weight = ((-lambda * af).exp() + (-lambda * bf).exp()) * (h / 2.0);
            let err = h.powi(3) / 12.0 * lambda.norm_sqr() * (-lambda.re * af).exp();
            let mut worst = 0.0f64;
            let per_sample = samples
                .iter()
                .map(|s| {
                    let psi = state.eval(s);
                    worst = worst.max(psi.l1_norm());
                    psi.map(|x| Complex64::new(*x, 0.0) * weight)
                })
                .collect();
            Ok((per_sample, err * worst))
        })
        .collect::<Result<_>>()?;

    let mut acc = vec![SparseVector::<Complex64>::zero(); samples.len()];
    let mut quadrature_bound = 0.0;
    for (per_sample, err) in &contributions {
        for (a, c) in acc.iter_mut().zip(per_sample) {
            *a = a.add(c);
        }
        quadrature_bound += err;
    }
    let tail_bound = (-lambda.re * rational_to_f64(t_max)).exp() / lambda.re * f.sup_norm();
    Ok(LaplaceOutput {
        state: SampledState::new(acc)?,
        quadrature_bound,
        tail_bound,
        panels: nodes.len().saturating_sub(1),
    })
}
