//! Similarity between preference relations and agglomerative clustering of users.

use std::fmt::Write as _;
use std::str::FromStr;

use num_traits::{ToPrimitive, Zero};

use crate::approx::{approximate_relation, ApproxParams};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ids::{AttributeId, ClusterId, Rational, UserId, ValueId};
use crate::profile::{ClusterProfile, ProfileKind, UserProfile};
use crate::relation::{intersect_relations, PreferenceRelation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SimilarityKind {
    IntersectionSize,
    Jaccard,
    WeightedIntersection,
    WeightedJaccard,
    ApproxJaccard,
    ApproxWeightedJaccard,
}

impl SimilarityKind {
    pub const ALL: [SimilarityKind; 6] = [
        SimilarityKind::IntersectionSize,
        SimilarityKind::Jaccard,
        SimilarityKind::WeightedIntersection,
        SimilarityKind::WeightedJaccard,
        SimilarityKind::ApproxJaccard,
        SimilarityKind::ApproxWeightedJaccard,
    ];

    pub fn is_approximate(self) -> bool {
        matches!(
            self,
            SimilarityKind::ApproxJaccard | SimilarityKind::ApproxWeightedJaccard
        )
    }

    pub fn is_weighted(self) -> bool {
        matches!(
            self,
            SimilarityKind::WeightedIntersection
                | SimilarityKind::WeightedJaccard
                | SimilarityKind::ApproxWeightedJaccard
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            SimilarityKind::IntersectionSize => "intersection",
            SimilarityKind::Jaccard => "jaccard",
            SimilarityKind::WeightedIntersection => "weighted-intersection",
            SimilarityKind::WeightedJaccard => "weighted-jaccard",
            SimilarityKind::ApproxJaccard => "approx-jaccard",
            SimilarityKind::ApproxWeightedJaccard => "approx-weighted-jaccard",
        }
    }

    /// Profile kind the clusters carry after agglomeration.
    pub fn profile_kind(self) -> ProfileKind {
        if self.is_approximate() {
            ProfileKind::Approximate
        } else {
            ProfileKind::ExactCommon
        }
    }
}

impl std::fmt::Display for SimilarityKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SimilarityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown similarity `{s}`")))
    }
}

pub fn sim_intersection(a: &PreferenceRelation, b: &PreferenceRelation) -> Result<Rational> {
    Ok(Rational::from(a.intersect(b)?.len() as i128))
}

/// `|a ∩ b| / |a ∪ b|`, zero when both are empty.
pub fn sim_jaccard(a: &PreferenceRelation, b: &PreferenceRelation) -> Result<Rational> {
    let i = a.intersect(b)?.len();
    let union = a.len() + b.len() - i;
    Ok(if union == 0 {
        Rational::zero()
    } else {
        Rational::new(i as i128, union as i128)
    })
}

/// Per-tuple weights shared by both weighted measures: over the common tuples the
/// mean of the two relations' weights of the better value, and the one-sided sums.
fn weighted_parts(a: &PreferenceRelation, b: &PreferenceRelation) -> Result<(Rational, Rational)> {
    a.intersect(b)?;
    let (wa, wb) = (a.weights()?, b.weights()?);
    let mut common = Rational::zero();
    let mut only = Rational::zero();
    for (x, y) in a.tuples() {
        if b.prefers(x, y) {
            common += (wa[x.index()] + wb[x.index()]) / Rational::from(2);
        } else {
            only += wa[x.index()];
        }
    }
    for (x, y) in b.tuples() {
        if !a.prefers(x, y) {
            only += wb[x.index()];
        }
    }
    Ok((common, only))
}

pub fn sim_weighted_intersection(a: &PreferenceRelation, b: &PreferenceRelation) -> Result<Rational> {
    Ok(weighted_parts(a, b)?.0)
}

pub fn sim_weighted_jaccard(a: &PreferenceRelation, b: &PreferenceRelation) -> Result<Rational> {
    let (common, only) = weighted_parts(a, b)?;
    let den = common + only;
    Ok(if den.is_zero() { Rational::zero() } else { common / den })
}

/// How often each ordered pair of distinct values appears among a set of
/// members. Entries are laid out lexicographically by (better, worse).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyVector {
    pub attribute: AttributeId,
    pub domain_size: usize,
    pub weighted: bool,
    pub entries: Vec<Rational>,
}

impl FrequencyVector {
    pub fn position(&self, x: ValueId, y: ValueId) -> usize {
        let (x, y) = (x.index(), y.index());
        debug_assert!(x != y);
        x * (self.domain_size - 1) + if y > x { y - 1 } else { y }
    }

    pub fn get(&self, x: ValueId, y: ValueId) -> Rational {
        self.entries[self.position(x, y)]
    }

    /// Member-count weighted mean of two vectors.
    pub fn merge(&self, n_self: usize, other: &FrequencyVector, n_other: usize) -> FrequencyVector {
        let (na, nb) = (Rational::from(n_self as i128), Rational::from(n_other as i128));
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a * na + b * nb) / (na + nb))
            .collect();
        FrequencyVector {
            entries,
            ..self.clone()
        }
    }
}

/// Unweighted: fraction of members holding each pair. Weighted: mean over
/// members of the member's weight for the better value, zero where absent.
pub fn frequency_vector(members: &[&UserProfile], d: AttributeId, weighted: bool) -> Result<FrequencyVector> {
    let first = members
        .first()
        .ok_or_else(|| Error::Mismatch("frequency vector over no members".into()))?;
    let n = first.relations[d.index()].domain_size();
    let mut v = FrequencyVector {
        attribute: d,
        domain_size: n,
        weighted,
        entries: vec![Rational::zero(); n * n.saturating_sub(1)],
    };
    for u in members {
        let r = &u.relations[d.index()];
        let w = if weighted { Some(r.weights()?) } else { None };
        for (x, y) in r.tuples() {
            let p = v.position(x, y);
            v.entries[p] += w.as_ref().map_or(Rational::from(1), |w| w[x.index()]);
        }
    }
    let total = Rational::from(members.len() as i128);
    for e in &mut v.entries {
        *e /= total;
    }
    Ok(v)
}

/// `Σ min / Σ max` over two frequency vectors, zero when both are empty.
pub fn sim_frequency(a: &FrequencyVector, b: &FrequencyVector) -> Rational {
    let (mut lo, mut hi) = (Rational::zero(), Rational::zero());
    for (x, y) in a.entries.iter().zip(&b.entries) {
        lo += x.min(y);
        hi += x.max(y);
    }
    if hi.is_zero() {
        Rational::zero()
    } else {
        lo / hi
    }
}

/// A cluster as seen by the similarity measures.
#[derive(Clone, Debug)]
pub struct Group {
    /// Ascending user ids.
    pub members: Vec<UserId>,
    /// Exact common relations (exact kinds only).
    pub relations: Vec<PreferenceRelation>,
    /// Frequency vectors (approximate kinds only).
    pub frequencies: Vec<FrequencyVector>,
}

impl Group {
    pub fn new(kind: SimilarityKind, members: &[&UserProfile]) -> Result<Self> {
        let attrs = members
            .first()
            .ok_or_else(|| Error::Mismatch("group with no members".into()))?
            .relations
            .len();
        let mut ids: Vec<UserId> = members.iter().map(|u| u.id).collect();
        ids.sort();
        let (mut relations, mut frequencies) = (Vec::new(), Vec::new());
        for d in 0..attrs as u32 {
            let d = AttributeId(d);
            if kind.is_approximate() {
                frequencies.push(frequency_vector(members, d, kind.is_weighted())?);
            } else {
                let rs: Vec<_> = members.iter().map(|u| &u.relations[d.index()]).collect();
                relations.push(intersect_relations(&rs)?);
            }
        }
        Ok(Self {
            members: ids,
            relations,
            frequencies,
        })
    }

    pub fn merge(&self, other: &Group) -> Result<Group> {
        let mut members: Vec<UserId> = self.members.iter().chain(&other.members).copied().collect();
        members.sort();
        let relations = self
            .relations
            .iter()
            .zip(&other.relations)
            .map(|(a, b)| a.intersect(b))
            .collect::<Result<_>>()?;
        let frequencies = self
            .frequencies
            .iter()
            .zip(&other.frequencies)
            .map(|(a, b)| a.merge(self.members.len(), b, other.members.len()))
            .collect();
        Ok(Group {
            members,
            relations,
            frequencies,
        })
    }

    pub fn attributes(&self) -> usize {
        self.relations.len().max(self.frequencies.len())
    }
}

/// Per-attribute similarity between two groups built for `kind`.
pub fn similarity(kind: SimilarityKind, a: &Group, b: &Group, d: AttributeId) -> Result<Rational> {
    let i = d.index();
    match kind {
        SimilarityKind::IntersectionSize => sim_intersection(&a.relations[i], &b.relations[i]),
        SimilarityKind::Jaccard => sim_jaccard(&a.relations[i], &b.relations[i]),
        SimilarityKind::WeightedIntersection => sim_weighted_intersection(&a.relations[i], &b.relations[i]),
        SimilarityKind::WeightedJaccard => sim_weighted_jaccard(&a.relations[i], &b.relations[i]),
        SimilarityKind::ApproxJaccard | SimilarityKind::ApproxWeightedJaccard => {
            Ok(sim_frequency(&a.frequencies[i], &b.frequencies[i]))
        }
    }
}

/// Sum of per-attribute similarities, optionally each divided by the domain size.
pub fn similarity_total(kind: SimilarityKind, a: &Group, b: &Group, normalize: bool) -> Result<Rational> {
    let mut total = Rational::zero();
    for d in 0..a.attributes() {
        let d = AttributeId(d as u32);
        let mut s = similarity(kind, a, b, d)?;
        if normalize {
            let m = if kind.is_approximate() {
                a.frequencies[d.index()].domain_size
            } else {
                a.relations[d.index()].domain_size()
            };
            s /= Rational::from(m as i128);
        }
        total += s;
    }
    Ok(total)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Merge {
    pub a: Vec<UserId>,
    pub b: Vec<UserId>,
    pub similarity: Rational,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dendrogram {
    pub leaves: Vec<UserId>,
    pub merges: Vec<Merge>,
}

fn label(members: &[UserId]) -> String {
    members.iter().map(|u| format!("c{u}")).collect::<Vec<_>>().join("+")
}

impl Dendrogram {
    /// One tab-separated line per merge: step, both sides, exact and decimal similarity.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, m) in self.merges.iter().enumerate() {
            let dec = m.similarity.to_f64().unwrap_or(f64::NAN);
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{:.6}",
                i + 1,
                label(&m.a),
                label(&m.b),
                m.similarity,
                dec
            );
        }
        s
    }

    /// Whether merge similarities never increase.
    pub fn is_monotone(&self) -> bool {
        self.merges.windows(2).all(|w| w[1].similarity <= w[0].similarity)
    }
}

#[derive(Clone, Debug, Default)]
pub struct AgglomerateOptions {
    /// Thresholds for the approximate relations of approximate-kind clusters.
    pub approx: ApproxParams,
    /// Divide each per-attribute similarity by its domain size.
    pub normalize: bool,
    pub exec: Execution,
}

/// Greedy agglomeration: merge the most similar pair while its similarity is at
/// least `h`. Ties go to the pair whose smallest member ids are lexicographically
/// smallest. Returns clusters numbered by smallest member, plus the merge log.
pub fn agglomerate_groups(
    users: &[UserProfile],
    kind: SimilarityKind,
    h: Rational,
    options: &AgglomerateOptions,
) -> Result<(Vec<Vec<UserId>>, Dendrogram)> {
    let mut order: Vec<&UserProfile> = users.iter().collect();
    order.sort_by_key(|u| u.id);
    let mut slots: Vec<Option<Group>> = order
        .iter()
        .map(|u| Group::new(kind, &[u]).map(Some))
        .collect::<Result<_>>()?;
    let n = slots.len();
    // sims[i][j] for i < j, over live slots.
    let mut sims: Vec<Vec<Rational>> = options
        .exec
        .map_range(n, |i| {
            ((i + 1)..n)
                .map(|j| {
                    similarity_total(
                        kind,
                        slots[i].as_ref().unwrap(),
                        slots[j].as_ref().unwrap(),
                        options.normalize,
                    )
                })
                .collect::<Result<Vec<_>>>()
        })
        .into_iter()
        .collect::<Result<_>>()?;
    let mut dendrogram = Dendrogram {
        leaves: order.iter().map(|u| u.id).collect(),
        merges: Vec::new(),
    };
    loop {
        let mut best: Option<(Rational, (UserId, UserId), usize, usize)> = None;
        for i in 0..n {
            let Some(gi) = &slots[i] else { continue };
            for j in (i + 1)..n {
                let Some(gj) = &slots[j] else { continue };
                let s = sims[i][j - i - 1];
                let (ri, rj) = (gi.members[0], gj.members[0]);
                let key = (ri.min(rj), ri.max(rj));
                let better = match &best {
                    None => true,
                    Some((bs, bk, ..)) => s > *bs || (s == *bs && key < *bk),
                };
                if better {
                    best = Some((s, key, i, j));
                }
            }
        }
        let Some((s, _, i, j)) = best else { break };
        if s < h {
            break;
        }
        let (a, b) = (slots[i].take().unwrap(), slots[j].take().unwrap());
        let merged = a.merge(&b)?;
        let (first, second) = if a.members[0] < b.members[0] { (a, b) } else { (b, a) };
        dendrogram.merges.push(Merge {
            a: first.members,
            b: second.members,
            similarity: s,
        });
        let refreshed = options.exec.map_range(n, |k| match &slots[k] {
            Some(g) if k != i => similarity_total(kind, &merged, g, options.normalize).map(Some),
            _ => Ok(None),
        });
        for (k, s) in refreshed.into_iter().enumerate() {
            if let Some(s) = s? {
                let (lo, hi) = (i.min(k), i.max(k));
                sims[lo][hi - lo - 1] = s;
            }
        }
        slots[i] = Some(merged);
    }
    let mut clusters: Vec<Vec<UserId>> = slots.into_iter().flatten().map(|g| g.members).collect();
    clusters.sort();
    Ok((clusters, dendrogram))
}

/// Agglomerate and build the cluster profiles the kind calls for.
pub fn agglomerate(
    users: &[UserProfile],
    kind: SimilarityKind,
    h: Rational,
    options: &AgglomerateOptions,
) -> Result<(Vec<ClusterProfile>, Dendrogram)> {
    let (partition, dendrogram) = agglomerate_groups(users, kind, h, options)?;
    let profiles = build_profiles(users, &partition, kind.profile_kind(), &options.approx, options.exec)?;
    Ok((profiles, dendrogram))
}

/// Cluster profiles for a partition; cluster ids follow partition order.
pub fn build_profiles(
    users: &[UserProfile],
    partition: &[Vec<UserId>],
    kind: ProfileKind,
    approx: &ApproxParams,
    exec: Execution,
) -> Result<Vec<ClusterProfile>> {
    let mut seen = std::collections::HashSet::new();
    for u in partition.iter().flatten() {
        if !seen.insert(*u) {
            return Err(Error::Config(format!("user {u} appears in more than one cluster")));
        }
    }
    if seen.len() != users.len() || users.iter().any(|u| !seen.contains(&u.id)) {
        return Err(Error::Config("clusters must partition the user set".into()));
    }
    exec.map(partition, |i, ids| {
        let members: Vec<&UserProfile> = ids
            .iter()
            .map(|id| users.iter().find(|u| u.id == *id).unwrap())
            .collect();
        let id = ClusterId(i as u32);
        let common = ClusterProfile::common(id, &members)?;
        match kind {
            ProfileKind::ExactCommon => Ok(common),
            ProfileKind::Approximate => {
                let relations = (0..common.relations.len())
                    .map(|d| approximate_relation(&members, AttributeId(d as u32), approx))
                    .collect::<Result<_>>()?;
                Ok(ClusterProfile {
                    relations,
                    kind: ProfileKind::Approximate,
                    ..common
                })
            }
        }
    })
    .into_iter()
    .collect()
}
