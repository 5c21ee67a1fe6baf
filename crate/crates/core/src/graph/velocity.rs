use super::EdgeId;
use crate::error::{Error, Result};
use crate::scalar::{rational_to_f64, Rational};
use num_traits::Signed;
use std::collections::BTreeMap;
use std::fmt;

/// Transport speed on one edge.
#[derive(Clone, Debug, PartialEq)]
pub enum Velocity {
    Exact(Rational),
    Real(f64),
}

impl Velocity {
    pub fn to_f64(&self) -> f64 {
        match self {
            Velocity::Exact(r) => rational_to_f64(r),
            Velocity::Real(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            Velocity::Exact(r) => Some(r),
            Velocity::Real(_) => None,
        }
    }

    fn check(&self, edge: EdgeId) -> Result<()> {
        let ok = match self {
            Velocity::Exact(r) => r.is_positive(),
            Velocity::Real(x) => x.is_finite() && *x > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidVelocity {
                edge,
                reason: format!("velocity {self} is not a finite positive number"),
            })
        }
    }
}

impl fmt::Display for Velocity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Velocity::Exact(r) => write!(f, "{r}"),
            Velocity::Real(x) => write!(f, "{x}"),
        }
    }
}

impl From<Rational> for Velocity {
    fn from(r: Rational) -> Self {
        Velocity::Exact(r)
    }
}

impl From<f64> for Velocity {
    fn from(x: f64) -> Self {
        Velocity::Real(x)
    }
}

/// Per-edge velocities `c_j`, with an optional default for edges not listed
/// (needed on lazy graphs).
#[derive(Clone, Debug, PartialEq)]
pub struct VelocityProfile {
    per_edge: BTreeMap<EdgeId, Velocity>,
    default: Option<Velocity>,
}

impl VelocityProfile {
    pub fn new(per_edge: impl IntoIterator<Item = (EdgeId, Velocity)>) -> Result<Self> {
        let per_edge: BTreeMap<EdgeId, Velocity> = per_edge.into_iter().collect();
        for (e, v) in &per_edge {
            v.check(*e)?;
        }
        Ok(Self {
            per_edge,
            default: None,
        })
    }

    /// The same velocity on every edge.
    pub fn uniform(v: impl Into<Velocity>) -> Result<Self> {
        let v = v.into();
        v.check(EdgeId(0))?;
        Ok(Self {
            per_edge: BTreeMap::new(),
            default: Some(v),
        })
    }

    pub fn exact(per_edge: impl IntoIterator<Item = (i64, Rational)>) -> Result<Self> {
        Self::new(
            per_edge
                .into_iter()
                .map(|(e, r)| (EdgeId(e), Velocity::Exact(r))),
        )
    }

    pub fn real(per_edge: impl IntoIterator<Item = (i64, f64)>) -> Result<Self> {
        Self::new(
            per_edge
                .into_iter()
                .map(|(e, x)| (EdgeId(e), Velocity::Real(x))),
        )
    }

    pub fn get(&self, edge: EdgeId) -> Result<&Velocity> {
        self.per_edge
            .get(&edge)
            .or(self.default.as_ref())
            .ok_or(Error::MissingVelocity(edge))
    }

    pub fn get_f64(&self, edge: EdgeId) -> Result<f64> {
        self.get(edge).map(Velocity::to_f64)
    }

    pub fn get_exact(&self, edge: EdgeId) -> Result<Rational> {
        self.get(edge)?
            .exact()
            .cloned()
            .ok_or(Error::NotRational(edge))
    }

    pub fn entries(&self) -> impl Iterator<Item = (EdgeId, &Velocity)> + '_ {
        self.per_edge.iter().map(|(e, v)| (*e, v))
    }

    pub fn default_velocity(&self) -> Option<&Velocity> {
        self.default.as_ref()
    }

    /// `(c_min, c_max)` over the stored velocities.
    pub fn bounds(&self) -> (f64, f64) {
        self.per_edge
            .values()
            .chain(self.default.iter())
            .map(Velocity::to_f64)
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), c| {
                (lo.min(c), hi.max(c))
            })
    }

    /// `true` when every stored velocity is exact.
    pub fn is_exact(&self) -> bool {
        self.per_edge
            .values()
            .chain(self.default.iter())
            .all(|v| v.exact().is_some())
    }

    /// `true` when all stored velocities have the same value.
    pub fn is_uniform(&self) -> bool {
        let mut it = self.per_edge.values().chain(self.default.iter());
        match it.next() {
            None => true,
            Some(first) => it.all(|v| match (first, v) {
                (Velocity::Exact(a), Velocity::Exact(b)) => a == b,
                _ => first.to_f64() == v.to_f64(),
            }),
        }
    }

    /// `true` when every edge of `edges` has velocity exactly 1.
    pub fn is_unit_on(&self, edges: &[EdgeId]) -> bool {
        let one = crate::scalar::int(1);
        edges.iter().all(|e| match self.get(*e) {
            Ok(Velocity::Exact(r)) => *r == one,
            Ok(Velocity::Real(x)) => *x == 1.0,
            Err(_) => false,
        })
    }

    /// Checks that every edge in `edges` has a velocity.
    pub fn covers(&self, edges: &[EdgeId]) -> Result<()> {
        for e in edges {
            self.get(*e)?;
        }
        Ok(())
    }
}
