//! States on the network.
//!
//! A [`NetworkState`] is a step function `[0, 1] -> l^1` on one breakpoint
//! grid shared by all edges. Piece `m` covers `[b_m, b_{m+1})`; the point `1`
//! belongs to the last piece.

use crate::error::{Error, Result};
use crate::graph::{AdjacencyOperator, EdgeId, SparseVector};
use crate::scalar::{int, ratio, rational_to_f64, Rational, Scalar};
use num_traits::{One, Zero};
use std::collections::BTreeSet;

#[derive(Clone, Debug)]
pub struct NetworkState<S> {
    breakpoints: Vec<Rational>,
    values: Vec<SparseVector<S>>,
    breakpoints_f64: Vec<f64>,
}

impl<S: Scalar> PartialEq for NetworkState<S> {
    fn eq(&self, other: &Self) -> bool {
        self.breakpoints == other.breakpoints && self.values == other.values
    }
}

impl<S: Scalar> NetworkState<S> {
    /// Builds a state from `k + 1` breakpoints `0 = b_0 < ... < b_k = 1` and
    /// `k` piece values, then canonicalises it.
    pub fn new(breakpoints: Vec<Rational>, values: Vec<SparseVector<S>>) -> Result<Self> {
        if values.is_empty() || breakpoints.len() != values.len() + 1 {
            return Err(Error::MalformedState(format!(
                "{} breakpoints for {} pieces",
                breakpoints.len(),
                values.len()
            )));
        }
        if !breakpoints[0].is_zero() || !breakpoints[breakpoints.len() - 1].is_one() {
            return Err(Error::MalformedState(
                "breakpoints must start at 0 and end at 1".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MalformedState(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        Ok(Self::canonical(breakpoints, values))
    }

    /// Canonicalises pieces that are already known to be ordered; empty pieces
    /// are dropped and equal neighbours merged.
    pub(crate) fn canonical(breakpoints: Vec<Rational>, values: Vec<SparseVector<S>>) -> Self {
        debug_assert_eq!(breakpoints.len(), values.len() + 1);
        let mut bps: Vec<Rational> = Vec::with_capacity(breakpoints.len());
        let mut vals: Vec<SparseVector<S>> = Vec::with_capacity(values.len());
        let mut starts = breakpoints.into_iter();
        let mut lo = starts.next().expect("at least one breakpoint");
        for (hi, v) in starts.zip(values) {
            if hi <= lo {
                continue;
            }
            match vals.last() {
                Some(last) if *last == v => {}
                _ => {
                    bps.push(lo.clone());
                    vals.push(v);
                }
            }
            lo = hi;
        }
        bps.push(lo);
        let breakpoints_f64 = bps.iter().map(rational_to_f64).collect();
        Self {
            breakpoints: bps,
            values: vals,
            breakpoints_f64,
        }
    }

    pub fn constant(v: SparseVector<S>) -> Self {
        Self::canonical(vec![int(0), int(1)], vec![v])
    }

    pub fn zero() -> Self {
        Self::constant(SparseVector::zero())
    }

    /// Value `v` on `[lo, hi)` and zero elsewhere.
    pub fn indicator(lo: Rational, hi: Rational, v: SparseVector<S>) -> Result<Self> {
        if lo < int(0) || hi <= lo || hi > int(1) {
            return Err(Error::MalformedState(format!("bad interval [{lo}, {hi})")));
        }
        let mut bps = vec![int(0)];
        let mut vals = Vec::new();
        if !lo.is_zero() {
            bps.push(lo.clone());
            vals.push(SparseVector::zero());
        }
        vals.push(v);
        if !hi.is_one() {
            bps.push(hi);
            vals.push(SparseVector::zero());
        }
        bps.push(int(1));
        Self::new(bps, vals)
    }

    pub fn breakpoints(&self) -> &[Rational] {
        &self.breakpoints
    }

    pub fn breakpoints_f64(&self) -> &[f64] {
        &self.breakpoints_f64
    }

    pub fn values(&self) -> &[SparseVector<S>] {
        &self.values
    }

    pub fn piece_count(&self) -> usize {
        self.values.len()
    }

    /// Pieces as `(lo, hi, value)`.
    pub fn pieces(&self) -> impl Iterator<Item = (&Rational, &Rational, &SparseVector<S>)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.values)
            .map(|(w, v)| (&w[0], &w[1], v))
    }

    pub fn piece_index(&self, s: &Rational) -> usize {
        let k = self.breakpoints.partition_point(|b| b <= s);
        k.saturating_sub(1).min(self.values.len() - 1)
    }

    pub fn piece_index_f64(&self, s: f64) -> usize {
        let k = self.breakpoints_f64.partition_point(|b| *b <= s);
        k.saturating_sub(1).min(self.values.len() - 1)
    }

    /// `f(s)` for `s` in `[0, 1]`.
    pub fn eval(&self, s: &Rational) -> &SparseVector<S> {
        &self.values[self.piece_index(s)]
    }

    pub fn eval_f64(&self, s: f64) -> &SparseVector<S> {
        &self.values[self.piece_index_f64(s)]
    }

    pub fn sup_norm(&self) -> S::Real {
        self.values
            .iter()
            .map(SparseVector::l1_norm)
            .fold(S::Real::zero(), |acc, n| if n > acc { n } else { acc })
    }

    pub fn total_mass(&self) -> S {
        self.pieces().fold(S::zero(), |acc, (lo, hi, v)| {
            acc + S::from_rational(&(hi - lo)) * v.sum()
        })
    }

    /// `(f(0+), f(1-))`.
    pub fn traces(&self) -> (&SparseVector<S>, &SparseVector<S>) {
        (&self.values[0], &self.values[self.values.len() - 1])
    }

    /// `||f(1) - op f(0)||_1`.
    pub fn boundary_residual(&self, op: &AdjacencyOperator) -> Result<S::Real> {
        let (at0, at1) = self.traces();
        Ok(at1.sub(&op.apply(at0)?).l1_norm())
    }

    pub fn support(&self) -> BTreeSet<EdgeId> {
        self.values.iter().flat_map(|v| v.support()).collect()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(SparseVector::is_nonnegative)
    }

    pub fn sample(&self, m: usize) -> Result<SampledState<S>> {
        if m == 0 {
            return Err(Error::Argument("sample grid needs M >= 1".into()));
        }
        let samples = (0..=m)
            .map(|k| self.eval(&ratio(k as i64, m as i64)).clone())
            .collect();
        SampledState::new(samples)
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> NetworkState<T> {
        NetworkState::canonical(
            self.breakpoints.clone(),
            self.values.iter().map(|v| v.map(&f)).collect(),
        )
    }

    pub fn scale(&self, a: &S) -> Self {
        Self::canonical(
            self.breakpoints.clone(),
            self.values.iter().map(|v| v.scale(a)).collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a.sub(b))
    }

    /// Pointwise product `(f_j(s) g_j(s))_j`.
    pub fn pointwise_mul(&self, other: &Self) -> Self {
        self.combine(other, |a, b| a.hadamard(b))
    }

    fn combine(
        &self,
        other: &Self,
        op: impl Fn(&SparseVector<S>, &SparseVector<S>) -> SparseVector<S>,
    ) -> Self {
        let grid = merge_grids(&self.breakpoints, &other.breakpoints);
        let values = grid
            .windows(2)
            .map(|w| op(self.eval(&w[0]), other.eval(&w[0])))
            .collect();
        Self::canonical(grid, values)
    }

    /// `int_0^1 sum_j f_j g_j`, exact over the common refinement.
    pub fn pair(&self, g: &TestFunction<S>) -> S {
        let grid = merge_grids(&self.breakpoints, &g.0.breakpoints);
        grid.windows(2).fold(S::zero(), |acc, w| {
            acc + S::from_rational(&(&w[1] - &w[0])) * self.eval(&w[0]).dot(g.0.eval(&w[0]))
        })
    }
}

impl NetworkState<Rational> {
    pub fn to_f64(&self) -> NetworkState<f64> {
        self.map(rational_to_f64)
    }
}

/// Sorted union of two breakpoint grids.
pub(crate) fn merge_grids(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let next = match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x == y => {
                i += 1;
                j += 1;
                x
            }
            (Some(x), Some(y)) if x < y => {
                i += 1;
                x
            }
            (Some(x), None) => {
                i += 1;
                x
            }
            (_, Some(y)) => {
                j += 1;
                y
            }
            (None, None) => unreachable!(),
        };
        out.push(next.clone());
    }
    out
}

/// Samples of a state on the uniform grid `s_m = m / M`, `m = 0..=M`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledState<S> {
    samples: Vec<SparseVector<S>>,
}

impl<S: Scalar> SampledState<S> {
    pub fn new(samples: Vec<SparseVector<S>>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::MalformedState(
                "a sampled state needs at least two samples".into(),
            ));
        }
        Ok(Self { samples })
    }

    pub fn zero(m: usize) -> Result<Self> {
        Self::new(vec![SparseVector::zero(); m + 1])
    }

    /// Number of intervals `M`.
    pub fn grid_size(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn grid_point(&self, m: usize) -> f64 {
        m as f64 / self.grid_size() as f64
    }

    pub fn samples(&self) -> &[SparseVector<S>] {
        &self.samples
    }

    pub fn get(&self, m: usize) -> &SparseVector<S> {
        &self.samples[m]
    }

    /// Edges carrying a nonzero value at some sample.
    pub fn support(&self) -> BTreeSet<EdgeId> {
        self.samples.iter().flat_map(|v| v.support()).collect()
    }

    pub fn sup_norm(&self) -> S::Real {
        self.samples
            .iter()
            .map(SparseVector::l1_norm)
            .fold(S::Real::zero(), |acc, n| if n > acc { n } else { acc })
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.samples.len() != other.samples.len() {
            return Err(Error::Argument(format!(
                "sample grids differ: M = {} vs {}",
                self.grid_size(),
                other.grid_size()
            )));
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a.add(b))
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(a, b)| a.sub(b))
                .collect(),
        })
    }

    pub fn scale(&self, a: &S) -> Self {
        Self {
            samples: self.samples.iter().map(|v| v.scale(a)).collect(),
        }
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> SampledState<T> {
        SampledState {
            samples: self.samples.iter().map(|v| v.map(&f)).collect(),
        }
    }

    /// `max_m ||a(s_m) - b(s_m)||_1` in `f64`.
    pub fn sup_distance(&self, other: &Self) -> Result<f64> {
        Ok(S::real_to_f64(&self.sub(other)?.sup_norm()))
    }

    /// Composite trapezoid approximation of the pairing with `g`.
    pub fn pair(&self, g: &TestFunction<S>) -> S {
        let m = self.grid_size() as i64;
        let h = ratio(1, m);
        let half = ratio(1, 2 * m);
        self.samples
            .iter()
            .enumerate()
            .fold(S::zero(), |acc, (k, v)| {
                let w = if k == 0 || k as i64 == m { &half } else { &h };
                acc + S::from_rational(w) * v.dot(g.0.eval(&ratio(k as i64, m)))
            })
    }

    pub fn is_nonnegative_within(&self, slack: f64) -> bool {
        self.samples.iter().all(|v| {
            v.iter().all(|(_, x)| {
                let z = x.to_complex();
                z.re >= -slack && z.im.abs() <= slack
            })
        })
    }
}

/// An element of `L^1([0,1], c_0)` represented as a step function.
#[derive(Clone, Debug)]
pub struct TestFunction<S>(pub NetworkState<S>);

impl<S: Scalar> PartialEq for TestFunction<S> {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0
    }
}

impl<S: Scalar> TestFunction<S> {
    pub fn new(state: NetworkState<S>) -> Self {
        Self(state)
    }

    pub fn state(&self) -> &NetworkState<S> {
        &self.0
    }

    /// `int_0^1 max_j |g_j(s)| ds`.
    pub fn l1_norm(&self) -> f64 {
        self.0
            .pieces()
            .map(|(lo, hi, v)| {
                let sup = v
                    .iter()
                    .map(|(_, x)| S::real_to_f64(&x.modulus()))
                    .fold(0.0, f64::max);
                rational_to_f64(&(hi - lo)) * sup
            })
            .sum()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> TestFunction<T> {
        TestFunction(self.0.map(f))
    }
}
