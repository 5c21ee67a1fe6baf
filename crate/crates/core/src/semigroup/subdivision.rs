use super::{shift_evolve, shift_jump_times, ExactEvolver};
use crate::error::{Error, Result};
use crate::graph::{
    AdjacencyOperator, Edge, EdgeId, MetricGraph, SparseVector, VelocityProfile, VertexId,
};
use crate::scalar::{floor_to_i64, fract, int, Rational, Scalar};
use crate::state::NetworkState;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet, HashMap};

/// Size limits for subdivision.
#[derive(Clone, Copy, Debug)]
pub struct SubdivisionLimits {
    /// Largest admissible bit width of `lcm(p_j)` and of every `l_j`.
    pub integer_bits: u64,
    /// Largest admissible number of sub-edges.
    pub max_sub_edges: u64,
}

impl Default for SubdivisionLimits {
    fn default() -> Self {
        Self {
            integer_bits: 64,
            max_sub_edges: 1 << 22,
        }
    }
}

/// Smallest `c > 0` with `c / c_j` integral for every edge, and the counts
/// `l_j = c / c_j`.
///
/// For `c_j = p_j / q_j` in lowest terms this is `lcm(p_j) / gcd(q_j)`.
pub fn common_multiplier(
    vel: &VelocityProfile,
    edges: &[EdgeId],
    limits: SubdivisionLimits,
) -> Result<(Rational, BTreeMap<EdgeId, u64>)> {
    let mut lcm = BigInt::one();
    let mut gcd = BigInt::zero();
    for (k, e) in edges.iter().enumerate() {
        let c = vel.get_exact(*e)?;
        lcm = lcm.lcm(c.numer());
        gcd = gcd.gcd(c.denom());
        if lcm.bits() > limits.integer_bits {
            return Err(Error::Overflow {
                edges: edges[..=k].to_vec(),
            });
        }
    }
    if edges.is_empty() {
        gcd = BigInt::one();
    }
    let c = Rational::new(lcm, gcd);
    let mut ell = BTreeMap::new();
    let mut too_wide = Vec::new();
    for e in edges {
        let l = &c / vel.get_exact(*e)?;
        debug_assert!(l.is_integer());
        match l.to_integer().to_u64() {
            Some(v) if 64 - v.leading_zeros() as u64 <= limits.integer_bits => {
                ell.insert(*e, v);
            }
            _ => too_wide.push(*e),
        }
    }
    if !too_wide.is_empty() {
        return Err(Error::Overflow { edges: too_wide });
    }
    Ok((c, ell))
}

/// The subdivided graph and the maps between states on both graphs.
///
/// Edge `j` becomes `l_j` sub-edges; sub-edge `k` (counted from the head)
/// covers the original parameter range `[(k-1)/l_j, k/l_j)`. Inserted vertices
/// pass everything through with weight 1; original vertices keep the weights
/// `w_ij`, and sub-edges inherit the velocity of their parent, so the scaled
/// operator on the subdivided graph carries `(c_j / c_i) w_ij` at original
/// vertices. Every sub-edge is traversed in time `1 / c`.
#[derive(Clone, Debug)]
pub struct SubdivisionPlan {
    original: MetricGraph,
    velocities: VelocityProfile,
    multiplier: Rational,
    ell: BTreeMap<EdgeId, u64>,
    sub_edges: BTreeMap<EdgeId, Vec<EdgeId>>,
    parent: HashMap<EdgeId, (EdgeId, u64)>,
    subdivided: MetricGraph,
    operator: AdjacencyOperator,
}

pub fn subdivide(g: &MetricGraph, vel: &VelocityProfile) -> Result<SubdivisionPlan> {
    SubdivisionPlan::new(g, vel, SubdivisionLimits::default())
}

impl SubdivisionPlan {
    pub fn new(g: &MetricGraph, vel: &VelocityProfile, limits: SubdivisionLimits) -> Result<Self> {
        let edges = g
            .edges()
            .ok_or_else(|| Error::Unsupported("subdivision needs a finite graph".into()))?;
        let ids: Vec<EdgeId> = edges.iter().map(|e| e.id).collect();
        let (multiplier, ell) = common_multiplier(vel, &ids, limits)?;
        let total: u64 = ell.values().sum();
        if total > limits.max_sub_edges {
            return Err(Error::Overflow {
                edges: ell
                    .iter()
                    .filter(|(_, l)| **l > 1)
                    .map(|(e, _)| *e)
                    .collect(),
            });
        }
        let identity = ell.values().all(|l| *l == 1);

        let mut sub_edges = BTreeMap::new();
        let mut parent = HashMap::new();
        let mut next = 1i64;
        for e in &ids {
            let subs: Vec<EdgeId> = (1..=ell[e])
                .map(|k| {
                    let id = if identity { *e } else { EdgeId(next) };
                    next += 1;
                    parent.insert(id, (*e, k));
                    id
                })
                .collect();
            sub_edges.insert(*e, subs);
        }

        let inserted = |j: EdgeId, k: u64| VertexId(format!("~e{j}:{k}"));
        let mut new_edges = Vec::with_capacity(total as usize);
        let mut weights = Vec::new();
        let mut sub_vel = Vec::with_capacity(total as usize);
        for e in &edges {
            let l = ell[&e.id];
            let subs = &sub_edges[&e.id];
            let c = vel.get(e.id)?.clone();
            for k in 1..=l {
                let head = if k == 1 {
                    e.head.clone()
                } else {
                    inserted(e.id, k - 1)
                };
                let tail = if k == l {
                    e.tail.clone()
                } else {
                    inserted(e.id, k)
                };
                let id = subs[(k - 1) as usize];
                new_edges.push(Edge { id, tail, head });
                sub_vel.push((id, c.clone()));
                if k >= 2 {
                    weights.push((subs[(k - 2) as usize], id, int(1)));
                }
            }
            for (i, w) in g.column(e.id)? {
                let entry = *sub_edges[&i].last().expect("l_i >= 1");
                weights.push((entry, subs[0], w));
            }
        }
        let name = if identity {
            g.name().to_string()
        } else {
            format!("{}~", g.name())
        };
        let subdivided = MetricGraph::finite(name, new_edges, weights)?;
        let sub_velocities = VelocityProfile::new(sub_vel)?;
        let operator = AdjacencyOperator::new(&subdivided, Some(sub_velocities))?;
        Ok(Self {
            original: g.clone(),
            velocities: vel.clone(),
            multiplier,
            ell,
            sub_edges,
            parent,
            subdivided,
            operator,
        })
    }

    pub fn multiplier(&self) -> &Rational {
        &self.multiplier
    }

    pub fn ell(&self) -> &BTreeMap<EdgeId, u64> {
        &self.ell
    }

    pub fn sub_edges(&self, edge: EdgeId) -> Option<&[EdgeId]> {
        self.sub_edges.get(&edge).map(Vec::as_slice)
    }

    /// Original edge and position `k` (1 = head side) of a sub-edge.
    pub fn parent(&self, sub: EdgeId) -> Option<(EdgeId, u64)> {
        self.parent.get(&sub).copied()
    }

    pub fn sub_edge_count(&self) -> usize {
        self.parent.len()
    }

    pub fn is_identity(&self) -> bool {
        self.ell.values().all(|l| *l == 1)
    }

    pub fn original(&self) -> &MetricGraph {
        &self.original
    }

    pub fn velocities(&self) -> &VelocityProfile {
        &self.velocities
    }

    pub fn subdivided(&self) -> &MetricGraph {
        &self.subdivided
    }

    /// Scaled operator of the subdivided graph.
    pub fn operator(&self) -> &AdjacencyOperator {
        &self.operator
    }

    fn distinct_ell(&self) -> BTreeSet<u64> {
        self.ell.values().copied().collect()
    }
}

/// Moves a state on the original graph to the subdivided graph.
pub fn lift_state<S: Scalar>(
    plan: &SubdivisionPlan,
    f: &NetworkState<S>,
) -> Result<NetworkState<S>> {
    let support = f.support();
    if let Some(e) = support.iter().find(|e| !plan.ell.contains_key(e)) {
        return Err(Error::Argument(format!(
            "edge {e} is not in the plan's graph"
        )));
    }
    if plan.is_identity() {
        return Ok(f.clone());
    }
    let mut grid: BTreeSet<Rational> = [int(0), int(1)].into_iter().collect();
    for l in plan.distinct_ell() {
        let l = int(l as i64);
        for b in f.breakpoints() {
            grid.insert(fract(&(&l * b)));
        }
    }
    let grid: Vec<Rational> = grid.into_iter().collect();
    let support: Vec<(EdgeId, u64, &[EdgeId])> = support
        .into_iter()
        .map(|e| (e, plan.ell[&e], plan.sub_edges[&e].as_slice()))
        .collect();
    let values = grid[..grid.len() - 1]
        .iter()
        .map(|sigma| {
            let mut entries = Vec::new();
            for (e, l, subs) in &support {
                let denom = int(*l as i64);
                for (k, sub) in subs.iter().enumerate() {
                    let x = (int(k as i64) + sigma) / &denom;
                    let v = f.eval(&x).get(*e);
                    if !v.is_zero() {
                        entries.push((*sub, v));
                    }
                }
            }
            SparseVector::from_entries(entries)
        })
        .collect();
    Ok(NetworkState::canonical(grid, values))
}

/// Inverse of [`lift_state`]: concatenates sub-edge profiles back onto the
/// original edges.
pub fn project_state<S: Scalar>(
    plan: &SubdivisionPlan,
    f: &NetworkState<S>,
) -> Result<NetworkState<S>> {
    if let Some(e) = f.support().iter().find(|e| !plan.parent.contains_key(e)) {
        return Err(Error::Argument(format!(
            "edge {e} is not a sub-edge of the plan"
        )));
    }
    if plan.is_identity() {
        return Ok(f.clone());
    }
    let mut grid: Vec<Rational> = Vec::new();
    for l in plan.distinct_ell() {
        let denom = int(l as i64);
        for k in 0..l {
            let base = int(k as i64);
            for sigma in &f.breakpoints()[..f.piece_count()] {
                grid.push((&base + sigma) / &denom);
            }
        }
    }
    grid.push(int(1));
    grid.sort();
    grid.dedup();
    let edges: Vec<(EdgeId, Rational, &[EdgeId])> = plan
        .ell
        .iter()
        .map(|(e, l)| (*e, int(*l as i64), plan.sub_edges[e].as_slice()))
        .collect();
    let values = grid[..grid.len() - 1]
        .iter()
        .map(|x| {
            let mut entries = Vec::new();
            for (e, l, subs) in &edges {
                let y = x * l;
                let k = floor_to_i64(&y).expect("bounded index") as usize;
                let sigma = &y - int(k as i64);
                let v = f.eval(&sigma).get(subs[k]);
                if !v.is_zero() {
                    entries.push((*e, v));
                }
            }
            SparseVector::from_entries(entries)
        })
        .collect();
    Ok(NetworkState::canonical(grid, values))
}

/// Flow with rational velocities, evaluated as the unit flow on the
/// subdivided graph at time `c * t`.
#[derive(Clone, Debug)]
pub struct RationalFlow {
    plan: SubdivisionPlan,
}

impl RationalFlow {
    pub fn new(g: &MetricGraph, vel: &VelocityProfile) -> Result<Self> {
        Ok(Self {
            plan: subdivide(g, vel)?,
        })
    }

    pub fn from_plan(plan: SubdivisionPlan) -> Self {
        Self { plan }
    }

    pub fn plan(&self) -> &SubdivisionPlan {
        &self.plan
    }

    /// Unit-time evolution on the subdivided graph for physical time `t`.
    pub fn evolve_lifted<S: Scalar>(
        &self,
        f: &NetworkState<S>,
        t: &Rational,
    ) -> Result<NetworkState<S>> {
        shift_evolve(&self.plan.operator, f, &(t * &self.plan.multiplier))
    }
}

impl ExactEvolver for RationalFlow {
    fn evolve<S: Scalar>(&self, f: &NetworkState<S>, t: &Rational) -> Result<NetworkState<S>> {
        let lifted = lift_state(&self.plan, f)?;
        project_state(&self.plan, &self.evolve_lifted(&lifted, t)?)
    }

    fn jump_times<S: Scalar>(
        &self,
        f: &NetworkState<S>,
        s: &Rational,
        t_max: &Rational,
    ) -> Result<Vec<Rational>> {
        let lifted = lift_state(&self.plan, f)?;
        let c = &self.plan.multiplier;
        let unit_max = t_max * c;
        let mut out = BTreeSet::new();
        for l in self.plan.distinct_ell() {
            let y = s * int(l as i64);
            let sigma = if y >= int(l as i64) {
                int(1)
            } else {
                fract(&y)
            };
            for tau in shift_jump_times(lifted.breakpoints(), &sigma, &unit_max) {
                out.insert(tau / c);
            }
        }
        Ok(out.into_iter().collect())
    }
}

/// `T_C(t) f` for rational velocities.
pub fn evolve_rational<S: Scalar>(
    g: &MetricGraph,
    vel: &VelocityProfile,
    f: &NetworkState<S>,
    t: &Rational,
) -> Result<NetworkState<S>> {
    RationalFlow::new(g, vel)?.evolve(f, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::scalar::ratio;

    fn exact(v: &[(i64, Rational)]) -> VelocityProfile {
        VelocityProfile::exact(v.iter().cloned()).unwrap()
    }

    #[test]
    fn multiplier_examples() {
        let ids = [EdgeId(1), EdgeId(2)];
        let lim = SubdivisionLimits::default();
        let (c, ell) = common_multiplier(&exact(&[(1, int(1)), (2, int(1))]), &ids, lim).unwrap();
        assert_eq!(
            (c, ell.values().copied().collect::<Vec<_>>()),
            (int(1), vec![1, 1])
        );
        let (c, ell) = common_multiplier(&exact(&[(1, int(2)), (2, int(3))]), &ids, lim).unwrap();
        assert_eq!(
            (c, ell.values().copied().collect::<Vec<_>>()),
            (int(6), vec![3, 2])
        );
        let (c, ell) =
            common_multiplier(&exact(&[(1, ratio(1, 2)), (2, ratio(1, 3))]), &ids, lim).unwrap();
        assert_eq!(
            (c, ell.values().copied().collect::<Vec<_>>()),
            (int(1), vec![2, 3])
        );
    }

    #[test]
    fn multiplier_overflow_and_irrational() {
        let ids = [EdgeId(1), EdgeId(2)];
        let big = exact(&[(1, int(1_000_003)), (2, int(999_983))]);
        let lim = SubdivisionLimits {
            integer_bits: 32,
            ..Default::default()
        };
        assert!(matches!(
            common_multiplier(&big, &ids, lim),
            Err(Error::Overflow { .. })
        ));
        let real = VelocityProfile::real([(1, 2f64.sqrt()), (2, 1.0)]).unwrap();
        assert!(matches!(
            common_multiplier(&real, &ids, SubdivisionLimits::default()),
            Err(Error::NotRational(_))
        ));
    }

    #[test]
    fn g2_half_speed_is_three_cycle() {
        let plan = subdivide(&fixtures::g2(), &exact(&[(1, ratio(1, 2)), (2, int(1))])).unwrap();
        assert_eq!(plan.sub_edge_count(), 3);
        let raw = AdjacencyOperator::unscaled(plan.subdivided()).unwrap();
        for e in plan.subdivided().edge_ids().unwrap() {
            let col = raw.column(e).unwrap();
            assert_eq!(col.len(), 1);
            assert_eq!(col[0].1.exact, Some(int(1)));
        }
        // Following the single outgoing entry from any sub-edge returns after three steps.
        let start = SparseVector::<Rational>::unit(EdgeId(1));
        assert_eq!(raw.apply_power(&start, 3).unwrap(), start);
        assert_ne!(raw.apply_power(&start, 1).unwrap(), start);
    }

    #[test]
    fn g5_split_last_edge() {
        let vel = exact(&[
            (1, int(1)),
            (2, int(1)),
            (3, int(1)),
            (4, int(1)),
            (5, ratio(1, 2)),
        ]);
        let plan = subdivide(&fixtures::g5(), &vel).unwrap();
        assert_eq!(plan.sub_edge_count(), 6);
        let subs = plan.sub_edges(EdgeId(5)).unwrap();
        assert_eq!(subs.len(), 2);
        let col = plan.operator().column(subs[1]).unwrap();
        assert_eq!(col.len(), 1);
        assert_eq!(col[0], (subs[0], crate::graph::Coef::exact(int(1))));
    }

    #[test]
    fn identity_plan() {
        let plan = subdivide(&fixtures::g2(), &exact(&[(1, int(1)), (2, int(1))])).unwrap();
        assert!(plan.is_identity());
        let f = NetworkState::indicator(
            ratio(1, 3),
            ratio(2, 3),
            SparseVector::<Rational>::unit(EdgeId(2)),
        )
        .unwrap();
        assert_eq!(lift_state(&plan, &f).unwrap(), f);
        assert_eq!(project_state(&plan, &f).unwrap(), f);
    }

    #[test]
    fn constant_lifts_to_constants() {
        let plan = subdivide(&fixtures::g2(), &exact(&[(1, ratio(1, 2)), (2, int(1))])).unwrap();
        let f = NetworkState::constant(SparseVector::<Rational>::unit(EdgeId(1)));
        let lifted = lift_state(&plan, &f).unwrap();
        assert_eq!(lifted.piece_count(), 1);
        let subs = plan.sub_edges(EdgeId(1)).unwrap();
        assert_eq!(
            lifted.values()[0].support().collect::<Vec<_>>(),
            subs.to_vec()
        );
        assert_eq!(project_state(&plan, &lifted).unwrap(), f);
    }

    #[test]
    fn uniform_speed_rescales_time() {
        let g = fixtures::g2();
        let f = NetworkState::indicator(
            int(0),
            ratio(1, 3),
            SparseVector::<Rational>::unit(EdgeId(1)),
        )
        .unwrap();
        let fast =
            evolve_rational(&g, &exact(&[(1, int(2)), (2, int(2))]), &f, &ratio(1, 4)).unwrap();
        let op = AdjacencyOperator::unscaled(&g).unwrap();
        assert_eq!(
            fast,
            super::super::evolve_unit(&op, &f, &ratio(1, 2)).unwrap()
        );
    }
}
