use super::EdgeId;
use crate::scalar::Scalar;
use num_traits::Zero;

/// Finitely supported vector indexed by edges; a point of `l^1`.
///
/// Entries are kept sorted by edge id with no stored zeros, so structural
/// equality is value equality.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseVector<S> {
    entries: Vec<(EdgeId, S)>,
}

impl<S: Scalar> Default for SparseVector<S> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<S: Scalar> SparseVector<S> {
    pub fn zero() -> Self {
        Self {
            entries: Vec::new(),
        }
    }

    pub fn unit(edge: EdgeId) -> Self {
        Self::from_entries([(edge, S::from_rational(&crate::scalar::int(1)))])
    }

    /// Builds a vector from arbitrary entries: duplicates are summed in input
    /// order, zeros dropped.
    pub fn from_entries(entries: impl IntoIterator<Item = (EdgeId, S)>) -> Self {
        let mut entries: Vec<(EdgeId, S)> = entries.into_iter().collect();
        entries.sort_by_key(|(e, _)| *e);
        let mut out: Vec<(EdgeId, S)> = Vec::with_capacity(entries.len());
        for (e, v) in entries {
            match out.last_mut() {
                Some((last, acc)) if *last == e => {
                    let cur = std::mem::replace(acc, S::zero());
                    *acc = cur + v;
                }
                _ => out.push((e, v)),
            }
        }
        out.retain(|(_, v)| !v.is_zero());
        Self { entries: out }
    }

    /// Wraps entries that are already sorted, unique and nonzero.
    pub(crate) fn from_sorted_unchecked(entries: Vec<(EdgeId, S)>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(entries.iter().all(|(_, v)| !v.is_zero()));
        Self { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (EdgeId, &S)> + '_ {
        self.entries.iter().map(|(e, v)| (*e, v))
    }

    pub fn entries(&self) -> &[(EdgeId, S)] {
        &self.entries
    }

    pub fn support(&self) -> impl Iterator<Item = EdgeId> + '_ {
        self.entries.iter().map(|(e, _)| *e)
    }

    pub fn get(&self, edge: EdgeId) -> S {
        match self.entries.binary_search_by_key(&edge, |(e, _)| *e) {
            Ok(i) => self.entries[i].1.clone(),
            Err(_) => S::zero(),
        }
    }

    pub fn l1_norm(&self) -> S::Real {
        self.entries
            .iter()
            .fold(S::Real::zero(), |acc, (_, v)| acc + v.modulus())
    }

    /// Sum of entries; the linear functional that column stochasticity preserves.
    pub fn sum(&self) -> S {
        self.entries
            .iter()
            .fold(S::zero(), |acc, (_, v)| acc + v.clone())
    }

    pub fn scale(&self, a: &S) -> Self {
        Self::from_entries(
            self.entries
                .iter()
                .map(|(e, v)| (*e, a.clone() * v.clone())),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        self.merge_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.merge_with(other, |a, b| a - b)
    }

    fn merge_with(&self, other: &Self, op: impl Fn(S, S) -> S) -> Self {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() || j < b.len() {
            let next = match (a.get(i), b.get(j)) {
                (Some((ea, va)), Some((eb, vb))) if ea == eb => {
                    i += 1;
                    j += 1;
                    (*ea, op(va.clone(), vb.clone()))
                }
                (Some((ea, va)), Some((eb, _))) if ea < eb => {
                    i += 1;
                    (*ea, op(va.clone(), S::zero()))
                }
                (Some((ea, va)), None) => {
                    i += 1;
                    (*ea, op(va.clone(), S::zero()))
                }
                (_, Some((eb, vb))) => {
                    j += 1;
                    (*eb, op(S::zero(), vb.clone()))
                }
                (None, None) => unreachable!(),
            };
            if !next.1.is_zero() {
                out.push(next);
            }
        }
        Self { entries: out }
    }

    /// Entrywise product (used for multiplication operators and pairings).
    pub fn hadamard(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.entries.len() && j < other.entries.len() {
            let (ea, va) = &self.entries[i];
            let (eb, vb) = &other.entries[j];
            match ea.cmp(eb) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let p = va.clone() * vb.clone();
                    if !p.is_zero() {
                        out.push((*ea, p));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        Self { entries: out }
    }

    pub fn dot(&self, other: &Self) -> S {
        self.hadamard(other).sum()
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> SparseVector<T> {
        SparseVector::from_entries(self.entries.iter().map(|(e, v)| (*e, f(v))))
    }

    pub fn is_nonnegative(&self) -> bool {
        self.entries.iter().all(|(_, v)| v.is_nonnegative())
    }

    /// Keeps only the entries whose edge satisfies `keep`.
    pub fn restrict(&self, keep: impl Fn(EdgeId) -> bool) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .filter(|(e, _)| keep(*e))
                .cloned()
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{ratio, Rational};

    fn e(i: i64) -> EdgeId {
        EdgeId(i)
    }

    #[test]
    fn normalizes_duplicates_and_zeros() {
        let v = SparseVector::from_entries([
            (e(3), ratio(1, 2)),
            (e(1), ratio(1, 3)),
            (e(3), ratio(-1, 2)),
            (e(2), ratio(0, 1)),
        ]);
        assert_eq!(v.entries(), &[(e(1), ratio(1, 3))]);
    }

    #[test]
    fn arithmetic() {
        let a = SparseVector::from_entries([(e(1), ratio(1, 1)), (e(2), ratio(2, 1))]);
        let b = SparseVector::from_entries([(e(2), ratio(2, 1)), (e(5), ratio(-3, 1))]);
        assert_eq!(
            a.sub(&b).entries(),
            &[(e(1), ratio(1, 1)), (e(5), ratio(3, 1))]
        );
        assert_eq!(a.dot(&b), ratio(4, 1));
        assert_eq!(b.l1_norm(), ratio(5, 1));
        assert_eq!(b.sum(), ratio(-1, 1));
        assert_eq!(a.get(e(9)), Rational::from_integer(0.into()));
    }
}
