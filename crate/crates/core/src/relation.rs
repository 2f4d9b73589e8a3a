//! Strict partial orders over one attribute domain.

use std::collections::VecDeque;

use crate::bitmatrix::BitMatrix;
use crate::error::{Error, Result};
use crate::ids::{AttributeId, Rational, ValueId};

/// A strict partial order stored as its transitive closure:
/// `prefers(x, y)` means x is preferred to y.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PreferenceRelation {
    attribute: AttributeId,
    closure: BitMatrix,
}

/// Transitive reduction of a relation, as adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HasseView {
    pub attribute: AttributeId,
    /// `succ[x]` lists the values covered by x, ascending.
    pub succ: Vec<Vec<ValueId>>,
}

impl HasseView {
    pub fn edges(&self) -> Vec<(ValueId, ValueId)> {
        self.succ
            .iter()
            .enumerate()
            .flat_map(|(x, ys)| ys.iter().map(move |&y| (ValueId(x as u32), y)))
            .collect()
    }
}

impl PreferenceRelation {
    pub fn empty(attribute: AttributeId, domain_size: usize) -> Self {
        Self {
            attribute,
            closure: BitMatrix::new(domain_size),
        }
    }

    /// Transitive closure of `edges`; fails if the closure is not a strict partial order.
    pub fn from_edges(attribute: AttributeId, domain_size: usize, edges: &[(ValueId, ValueId)]) -> Result<Self> {
        let mut m = BitMatrix::new(domain_size);
        for &(x, y) in edges {
            for v in [x, y] {
                if v.index() >= domain_size {
                    return Err(Error::UnknownValue { attribute, value: v });
                }
            }
            m.set(x.index(), y.index());
        }
        m.close();
        for x in 0..domain_size {
            if m.get(x, x) {
                // Report a witness pair on the cycle.
                let on_cycle = (0..domain_size).find(|&y| y != x && m.get(x, y) && m.get(y, x));
                let y = on_cycle.unwrap_or(x);
                return Err(Error::Cycle {
                    attribute,
                    x: ValueId(x as u32),
                    y: ValueId(y as u32),
                });
            }
        }
        Ok(Self { attribute, closure: m })
    }

    /// Wrap a matrix that must already be a strict partial order.
    pub(crate) fn from_closure_unchecked(attribute: AttributeId, closure: BitMatrix) -> Self {
        debug_assert!(is_strict_partial_order(&closure));
        Self { attribute, closure }
    }

    pub fn attribute(&self) -> AttributeId {
        self.attribute
    }

    pub fn domain_size(&self) -> usize {
        self.closure.size()
    }

    pub fn closure(&self) -> &BitMatrix {
        &self.closure
    }

    #[inline]
    pub fn prefers(&self, x: ValueId, y: ValueId) -> bool {
        self.closure.get(x.index(), y.index())
    }

    /// Number of tuples in the closure.
    pub fn len(&self) -> usize {
        self.closure.count_ones()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Closure tuples, lexicographic by (better, worse).
    pub fn tuples(&self) -> impl Iterator<Item = (ValueId, ValueId)> + '_ {
        self.closure.ones().map(|(x, y)| (ValueId(x as u32), ValueId(y as u32)))
    }

    pub fn is_subset_of(&self, other: &PreferenceRelation) -> bool {
        self.closure.is_subset_of(&other.closure)
    }

    /// Add `(x, y)` and re-close. Refused (returning false) when y ⪰ x already;
    /// when `(x, y)` is present it is a no-op that returns true.
    pub fn try_insert(&mut self, x: ValueId, y: ValueId) -> bool {
        let (x, y) = (x.index(), y.index());
        if x == y || self.closure.get(y, x) {
            return false;
        }
        if self.closure.get(x, y) {
            return true;
        }
        // Every a ⪰ x now beats every b ⪯ y.
        let n = self.closure.size();
        let mut below_y = self.closure.row(y).to_vec();
        below_y[y / 64] |= 1 << (y % 64);
        for a in 0..n {
            if a == x || self.closure.get(a, x) {
                for (i, word) in below_y.iter().enumerate() {
                    let mut bits = *word;
                    while bits != 0 {
                        let b = i * 64 + bits.trailing_zeros() as usize;
                        bits &= bits - 1;
                        self.closure.set(a, b);
                    }
                }
            }
        }
        true
    }

    pub fn intersect(&self, other: &PreferenceRelation) -> Result<Self> {
        if self.attribute != other.attribute {
            return Err(Error::AttributeMismatch {
                left: self.attribute,
                right: other.attribute,
            });
        }
        if self.domain_size() != other.domain_size() {
            return Err(Error::Mismatch(format!(
                "domain sizes {} and {} on attribute {}",
                self.domain_size(),
                other.domain_size(),
                self.attribute
            )));
        }
        let mut m = self.closure.clone();
        m.and_assign(&other.closure);
        Ok(Self::from_closure_unchecked(self.attribute, m))
    }

    pub fn hasse(&self) -> HasseView {
        let n = self.domain_size();
        let mut succ = vec![Vec::new(); n];
        for (x, ys) in succ.iter_mut().enumerate() {
            for y in 0..n {
                if !self.closure.get(x, y) {
                    continue;
                }
                // (x, y) is a cover unless some z sits strictly between.
                let between = (0..n).any(|z| self.closure.get(x, z) && self.closure.get(z, y));
                if !between {
                    ys.push(ValueId(y as u32));
                }
            }
        }
        HasseView {
            attribute: self.attribute,
            succ,
        }
    }

    /// Values nothing is preferred over, ascending.
    pub fn maximal_values(&self) -> Vec<ValueId> {
        let n = self.domain_size();
        (0..n)
            .filter(|&y| (0..n).all(|x| !self.closure.get(x, y)))
            .map(|y| ValueId(y as u32))
            .collect()
    }

    /// Shortest Hasse-edge distance from the nearest maximal value, per value.
    /// `None` marks a value no maximal value reaches.
    pub fn depths(&self) -> Vec<Option<usize>> {
        let hasse = self.hasse();
        let mut dist = vec![None; self.domain_size()];
        let mut queue = VecDeque::new();
        for s in self.maximal_values() {
            dist[s.index()] = Some(0);
            queue.push_back(s.index());
        }
        while let Some(x) = queue.pop_front() {
            let d = dist[x].unwrap();
            for &y in &hasse.succ[x] {
                if dist[y.index()].is_none() {
                    dist[y.index()] = Some(d + 1);
                    queue.push_back(y.index());
                }
            }
        }
        dist
    }

    /// `1 / (min distance from a maximal value + 1)` for every value.
    pub fn weights(&self) -> Result<Vec<Rational>> {
        self.depths()
            .into_iter()
            .enumerate()
            .map(|(v, d)| match d {
                Some(d) => Ok(Rational::new(1, d as i128 + 1)),
                None => Err(Error::UnreachableValue {
                    attribute: self.attribute,
                    value: ValueId(v as u32),
                }),
            })
            .collect()
    }

    pub fn weight(&self, v: ValueId) -> Result<Rational> {
        if v.index() >= self.domain_size() {
            return Err(Error::UnknownValue {
                attribute: self.attribute,
                value: v,
            });
        }
        self.depths()[v.index()]
            .map(|d| Rational::new(1, d as i128 + 1))
            .ok_or(Error::UnreachableValue {
                attribute: self.attribute,
                value: v,
            })
    }
}

impl std::fmt::Debug for PreferenceRelation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PreferenceRelation")
            .field("attribute", &self.attribute)
            .field("tuples", &self.closure)
            .finish()
    }
}

pub fn is_strict_partial_order(m: &BitMatrix) -> bool {
    let n = m.size();
    for x in 0..n {
        if m.get(x, x) {
            return false;
        }
        for y in 0..n {
            if m.get(x, y) {
                if m.get(y, x) {
                    return false;
                }
                for z in 0..n {
                    if m.get(y, z) && !m.get(x, z) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

pub fn relation_from_edges(
    attribute: AttributeId,
    domain_size: usize,
    edges: &[(ValueId, ValueId)],
) -> Result<PreferenceRelation> {
    PreferenceRelation::from_edges(attribute, domain_size, edges)
}

/// Intersection of closures; the result is already transitively closed.
pub fn intersect_relations(rs: &[&PreferenceRelation]) -> Result<PreferenceRelation> {
    let (first, rest) = rs
        .split_first()
        .ok_or_else(|| Error::Mismatch("intersection of no relations".into()))?;
    let mut acc = (*first).clone();
    for r in rest {
        acc = acc.intersect(r)?;
    }
    Ok(acc)
}

pub fn transitive_reduction(r: &PreferenceRelation) -> HasseView {
    r.hasse()
}

pub fn maximal_values(r: &PreferenceRelation) -> Vec<ValueId> {
    r.maximal_values()
}

pub fn min_distance_weight(r: &PreferenceRelation, v: ValueId) -> Result<Rational> {
    r.weight(v)
}
