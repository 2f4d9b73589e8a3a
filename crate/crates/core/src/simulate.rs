//! Deriving preference relations from interaction logs.
//!
//! Both rules compare two values by a pair of statistics and prefer `a` to `b`
//! when `a` is at least as good on both and strictly better on one. Values the
//! user never interacted with take part in no tuple.

use std::collections::BTreeMap;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::ids::{AttributeId, ObjectId, Rational, UserId, ValueId};
use crate::profile::UserProfile;
use crate::relation::PreferenceRelation;
use crate::schema::AttributeSchema;

/// A user's rating of an object, with the values the object carries on each
/// attribute (several per attribute for multi-valued fields such as cast lists).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatingEvent {
    pub user: UserId,
    pub object: ObjectId,
    pub rating: Rational,
    pub values: Vec<(AttributeId, ValueId)>,
}

/// Two non-negative interaction counts between a user and a value, such as
/// collaborations and citations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountRecord {
    pub user: UserId,
    pub attribute: AttributeId,
    pub value: ValueId,
    pub first: u64,
    pub second: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteractionLog {
    /// Inclusive rating bounds.
    pub scale: (Rational, Rational),
    pub ratings: Vec<RatingEvent>,
    pub counts: Vec<CountRecord>,
}

impl Default for InteractionLog {
    fn default() -> Self {
        Self {
            scale: (Rational::zero(), Rational::from(5)),
            ratings: Vec::new(),
            counts: Vec::new(),
        }
    }
}

/// `a` beats `b` by weak dominance on two keys with one strict.
fn pair_dominates<A: PartialOrd, B: PartialOrd>(a: (&A, &B), b: (&A, &B)) -> bool {
    (a.0 > b.0 && a.1 >= b.1) || (a.0 >= b.0 && a.1 > b.1)
}

fn relation_from_stats<A: PartialOrd, B: PartialOrd>(
    attribute: AttributeId,
    domain_size: usize,
    stats: &BTreeMap<ValueId, (A, B)>,
) -> Result<PreferenceRelation> {
    let mut edges = Vec::new();
    for (a, sa) in stats {
        for (b, sb) in stats {
            if a != b && pair_dominates((&sa.0, &sa.1), (&sb.0, &sb.1)) {
                edges.push((*a, *b));
            }
        }
    }
    PreferenceRelation::from_edges(attribute, domain_size, &edges)
}

/// Rating rule: average rating R and interaction count M per value.
pub fn simulate_relation_rating(
    log: &InteractionLog,
    user: UserId,
    attribute: AttributeId,
    domain_size: usize,
) -> Result<PreferenceRelation> {
    let mut sums: BTreeMap<ValueId, (Rational, i128)> = BTreeMap::new();
    for e in log.ratings.iter().filter(|e| e.user == user) {
        if e.rating < log.scale.0 || e.rating > log.scale.1 {
            return Err(Error::Mismatch(format!(
                "rating {} of object {} is outside [{}, {}]",
                e.rating, e.object, log.scale.0, log.scale.1
            )));
        }
        for &(d, v) in &e.values {
            if d == attribute {
                let s = sums.entry(v).or_insert((Rational::zero(), 0));
                s.0 += e.rating;
                s.1 += 1;
            }
        }
    }
    let stats: BTreeMap<ValueId, (Rational, i128)> = sums
        .into_iter()
        .map(|(v, (sum, m))| (v, (sum / Rational::from(m), m)))
        .collect();
    relation_from_stats(attribute, domain_size, &stats)
}

/// Count rule: the two counts per value, summed over the user's records.
pub fn simulate_relation_counts(
    log: &InteractionLog,
    user: UserId,
    attribute: AttributeId,
    domain_size: usize,
) -> Result<PreferenceRelation> {
    let mut stats: BTreeMap<ValueId, (u64, u64)> = BTreeMap::new();
    for r in log.counts.iter().filter(|r| r.user == user && r.attribute == attribute) {
        let s = stats.entry(r.value).or_default();
        s.0 += r.first;
        s.1 += r.second;
    }
    relation_from_stats(attribute, domain_size, &stats)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    Rating,
    Counts,
}

/// Every user appearing in the log, one relation per schema attribute.
pub fn simulate_profiles(log: &InteractionLog, schema: &AttributeSchema, rule: Rule) -> Result<Vec<UserProfile>> {
    let mut ids: Vec<UserId> = match rule {
        Rule::Rating => log.ratings.iter().map(|e| e.user).collect(),
        Rule::Counts => log.counts.iter().map(|r| r.user).collect(),
    };
    ids.sort();
    ids.dedup();
    ids.into_iter()
        .map(|u| {
            let relations = schema
                .ids()
                .map(|d| match rule {
                    Rule::Rating => simulate_relation_rating(log, u, d, schema.domain_size(d)),
                    Rule::Counts => simulate_relation_counts(log, u, d, schema.domain_size(d)),
                })
                .collect::<Result<_>>()?;
            Ok(UserProfile::new(u, relations))
        })
        .collect()
}
