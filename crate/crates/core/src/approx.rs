//! Approximate common preference relations and result-quality metrics.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::ids::{AttributeId, ObjectId, Rational, UserId, ValueId};
use crate::profile::UserProfile;
use crate::relation::{intersect_relations, PreferenceRelation};

/// Every ordered pair of distinct values with the fraction of members
/// holding it, sorted by frequency descending then by pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairFrequencyTable {
    pub attribute: AttributeId,
    pub domain_size: usize,
    pub rows: Vec<((ValueId, ValueId), Rational)>,
}

impl PairFrequencyTable {
    pub fn from_members(members: &[&UserProfile], attribute: AttributeId) -> Result<Self> {
        let rels: Vec<&PreferenceRelation> = members.iter().map(|u| &u.relations[attribute.index()]).collect();
        Self::from_relations(&rels)
    }

    pub fn from_relations(rels: &[&PreferenceRelation]) -> Result<Self> {
        let first = rels
            .first()
            .ok_or_else(|| Error::Mismatch("frequency table over no members".into()))?;
        let n = first.domain_size();
        let mut counts = vec![0i128; n * n];
        for r in rels {
            if r.attribute() != first.attribute() {
                return Err(Error::AttributeMismatch {
                    left: first.attribute(),
                    right: r.attribute(),
                });
            }
            for (x, y) in r.tuples() {
                counts[x.index() * n + y.index()] += 1;
            }
        }
        let total = rels.len() as i128;
        let mut rows = Vec::with_capacity(n * n.saturating_sub(1));
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    let pair = (ValueId(x as u32), ValueId(y as u32));
                    rows.push((pair, Rational::new(counts[x * n + y], total)));
                }
            }
        }
        // Stable sort keeps the lexicographic pair order among equal frequencies.
        rows.sort_by_key(|r| std::cmp::Reverse(r.1));
        Ok(Self {
            attribute: first.attribute(),
            domain_size: n,
            rows,
        })
    }
}

/// Threshold pair for the greedy construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproxParams {
    /// Size cap on the closed relation; `None` means `7·|common| + 7`.
    pub theta1: Option<usize>,
    /// Frequency floor (exclusive).
    pub theta2: Rational,
}

impl Default for ApproxParams {
    fn default() -> Self {
        Self {
            theta1: None,
            theta2: Rational::new(3, 5),
        }
    }
}

impl ApproxParams {
    pub fn theta1_for(&self, common_len: usize) -> usize {
        self.theta1.unwrap_or(7 * common_len + 7)
    }
}

/// What happened to each scanned pair.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ApproxTrace {
    /// Pairs added (with their closure), in order.
    pub admitted: Vec<(ValueId, ValueId)>,
    /// Pairs whose reverse was already implied.
    pub rejected: Vec<(ValueId, ValueId)>,
    /// The pair at which the scan stopped, if it stopped before the end.
    pub stopped_at: Option<(ValueId, ValueId)>,
}

pub fn get_approx_preference_tuples(table: &PairFrequencyTable, theta1: usize, theta2: Rational) -> PreferenceRelation {
    get_approx_preference_tuples_traced(table, theta1, theta2).0
}

pub fn get_approx_preference_tuples_traced(
    table: &PairFrequencyTable,
    theta1: usize,
    theta2: Rational,
) -> (PreferenceRelation, ApproxTrace) {
    let mut r = PreferenceRelation::empty(table.attribute, table.domain_size);
    let mut trace = ApproxTrace::default();
    for &((x, y), freq) in &table.rows {
        if freq.is_one() {
            // Common tuples: their union is the (closed) intersection.
            let ok = r.try_insert(x, y);
            debug_assert!(ok);
            trace.admitted.push((x, y));
            continue;
        }
        if r.len() >= theta1 || freq <= theta2 {
            trace.stopped_at = Some((x, y));
            break;
        }
        if r.prefers(x, y) {
            continue;
        }
        if r.try_insert(x, y) {
            trace.admitted.push((x, y));
        } else {
            trace.rejected.push((x, y));
        }
    }
    (r, trace)
}

/// Approximate relation of `members` on one attribute, with default-θ1 resolution.
pub fn approximate_relation(
    members: &[&UserProfile],
    attribute: AttributeId,
    params: &ApproxParams,
) -> Result<PreferenceRelation> {
    let rels: Vec<&PreferenceRelation> = members.iter().map(|u| &u.relations[attribute.index()]).collect();
    let common = intersect_relations(&rels)?;
    let table = PairFrequencyTable::from_relations(&rels)?;
    Ok(get_approx_preference_tuples(
        &table,
        params.theta1_for(common.len()),
        params.theta2,
    ))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserAccuracy {
    pub user: UserId,
    pub exact: usize,
    pub approx: usize,
    pub intersection: usize,
    pub precision: Rational,
    pub recall: Rational,
    pub f_measure: Rational,
    pub accuracy: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AccuracyReport {
    pub users: Vec<UserAccuracy>,
    pub precision: Rational,
    pub recall: Rational,
    pub f_measure: Rational,
    pub accuracy: Rational,
    /// Objects each user's frontier was drawn from.
    pub universe: usize,
}

fn ratio(num: usize, den: usize) -> Rational {
    if den == 0 {
        Rational::one()
    } else {
        Rational::new(num as i128, den as i128)
    }
}

pub fn f_measure(p: Rational, r: Rational) -> Rational {
    if (p + r).is_zero() {
        Rational::zero()
    } else {
        Rational::from(2) * p * r / (p + r)
    }
}

/// Precision, recall, F-measure and accuracy of approximate frontiers against exact ones.
pub fn accuracy_metrics(
    exact: &BTreeMap<UserId, BTreeSet<ObjectId>>,
    approx: &BTreeMap<UserId, BTreeSet<ObjectId>>,
    universe: usize,
) -> Result<AccuracyReport> {
    if exact.keys().ne(approx.keys()) {
        return Err(Error::Mismatch(
            "exact and approximate runs cover different users".into(),
        ));
    }
    let mut users = Vec::with_capacity(exact.len());
    let (mut inter, mut n_exact, mut n_approx, mut correct) = (0, 0, 0, 0);
    for (&u, e) in exact {
        let a = &approx[&u];
        let i = e.intersection(a).count();
        let wrong = (a.len() - i) + (e.len() - i);
        if e.len().max(a.len()) > universe {
            return Err(Error::Mismatch(format!(
                "user {u} has more frontier objects than the universe"
            )));
        }
        let (p, r) = (ratio(i, a.len()), ratio(i, e.len()));
        users.push(UserAccuracy {
            user: u,
            exact: e.len(),
            approx: a.len(),
            intersection: i,
            precision: p,
            recall: r,
            f_measure: f_measure(p, r),
            accuracy: ratio(universe - wrong.min(universe), universe),
        });
        inter += i;
        n_exact += e.len();
        n_approx += a.len();
        correct += universe - wrong.min(universe);
    }
    let (p, r) = (ratio(inter, n_approx), ratio(inter, n_exact));
    Ok(AccuracyReport {
        users,
        precision: p,
        recall: r,
        f_measure: f_measure(p, r),
        accuracy: ratio(correct, universe * exact.len()),
        universe,
    })
}
