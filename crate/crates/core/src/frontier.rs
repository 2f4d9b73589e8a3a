use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::dominance::{compare, Dominance};
use crate::engine::{Comparisons, Engine, StepOutcome};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ids::{Holder, ObjectId, UserId};
use crate::profile::{ObjectRecord, Preferences, UserProfile};

/// Pareto-optimal objects of one holder, in insertion order.
#[derive(Clone, Debug)]
pub struct ParetoFrontier {
    holder: Holder,
    members: Vec<ObjectRecord>,
}

impl ParetoFrontier {
    pub fn new(holder: Holder) -> Self {
        Self {
            holder,
            members: Vec::new(),
        }
    }

    pub fn holder(&self) -> Holder {
        self.holder
    }

    pub fn members(&self) -> &[ObjectRecord] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        self.members.iter().any(|m| m.id == id)
    }

    pub fn ids(&self) -> BTreeSet<ObjectId> {
        self.members.iter().map(|m| m.id).collect()
    }

    pub fn insert(&mut self, o: ObjectRecord) {
        debug_assert!(!self.contains(o.id));
        self.members.push(o);
    }

    pub fn remove(&mut self, id: ObjectId) -> Option<ObjectRecord> {
        let i = self.members.iter().position(|m| m.id == id)?;
        Some(self.members.remove(i))
    }

    /// Drop every member whose id is in `ids`.
    pub fn remove_all(&mut self, ids: &[ObjectId]) {
        if !ids.is_empty() {
            self.members.retain(|m| !ids.contains(&m.id));
        }
    }

    /// Pairwise scan: does any member dominate another?
    pub fn is_antichain<P: Preferences + ?Sized>(&self, profile: &P) -> bool {
        let rels = profile.relations();
        self.members.iter().all(|a| {
            self.members
                .iter()
                .all(|b| compare(&a.values, &b.values, rels) != Dominance::Dominates)
        })
    }
}

/// Object id to the users currently holding it as Pareto-optimal.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TargetIndex {
    map: HashMap<ObjectId, BTreeSet<UserId>>,
}

impl TargetIndex {
    pub fn add(&mut self, o: ObjectId, u: UserId) {
        self.map.entry(o).or_default().insert(u);
    }

    pub fn remove(&mut self, o: ObjectId, u: UserId) {
        if let Some(s) = self.map.get_mut(&o) {
            s.remove(&u);
            if s.is_empty() {
                self.map.remove(&o);
            }
        }
    }

    pub fn holders(&self, o: ObjectId) -> Vec<UserId> {
        self.map
            .get(&o)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default()
    }

    /// Apply one user's frontier update for arriving `o`.
    pub fn record(&mut self, u: UserId, o: ObjectId, update: &FrontierUpdate) {
        for &e in &update.evicted {
            self.remove(e, u);
        }
        if update.accepted {
            self.add(o, u);
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// `u ∈ index[o]` exactly when `o` is in `u`'s frontier.
    pub fn is_consistent<'a>(&self, frontiers: impl IntoIterator<Item = (UserId, &'a ParetoFrontier)>) -> bool {
        let mut expected: HashMap<ObjectId, BTreeSet<UserId>> = HashMap::new();
        for (u, f) in frontiers {
            for m in f.members() {
                expected.entry(m.id).or_default().insert(u);
            }
        }
        expected == self.map
    }
}

/// Effect of offering one object to one frontier.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FrontierUpdate {
    pub accepted: bool,
    pub evicted: Vec<ObjectId>,
    pub comparisons: u64,
}

/// Offer `o` to `frontier`. Scans members in insertion order and stops at
/// the first member that dominates or equals `o`.
pub fn update_pareto_frontier<P: Preferences + ?Sized>(
    profile: &P,
    o: &ObjectRecord,
    frontier: &mut ParetoFrontier,
) -> FrontierUpdate {
    let rels = profile.relations();
    let mut out = FrontierUpdate {
        accepted: true,
        ..Default::default()
    };
    for m in &frontier.members {
        out.comparisons += 1;
        match compare(&o.values, &m.values, rels) {
            Dominance::Dominates => out.evicted.push(m.id),
            Dominance::DominatedBy => {
                out.accepted = false;
                break;
            }
            Dominance::Identical => break,
            Dominance::Incomparable => {}
        }
    }
    if out.accepted {
        frontier.remove_all(&out.evicted);
        frontier.insert(o.clone());
    } else {
        // A dominator of o cannot coexist with a member o dominates.
        debug_assert!(out.evicted.is_empty());
        out.evicted.clear();
    }
    out
}

/// Brute-force frontier: objects no other object dominates.
pub fn frontier_oracle<P: Preferences + ?Sized>(objects: &[ObjectRecord], profile: &P) -> BTreeSet<ObjectId> {
    let rels = profile.relations();
    objects
        .iter()
        .filter(|o| {
            objects
                .iter()
                .all(|p| compare(&p.values, &o.values, rels) != Dominance::Dominates)
        })
        .map(|o| o.id)
        .collect()
}

/// Independent per-user frontier maintenance.
#[derive(Clone, Debug)]
pub struct Baseline {
    users: Vec<UserProfile>,
    frontiers: Vec<ParetoFrontier>,
    index: TargetIndex,
    seen: HashSet<ObjectId>,
    exec: Execution,
    totals: Comparisons,
}

impl Baseline {
    pub fn new(users: Vec<UserProfile>) -> Self {
        let frontiers = users.iter().map(|u| ParetoFrontier::new(Holder::User(u.id))).collect();
        Self {
            users,
            frontiers,
            index: TargetIndex::default(),
            seen: HashSet::new(),
            exec: Execution::default(),
            totals: Comparisons::default(),
        }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn users(&self) -> &[UserProfile] {
        &self.users
    }

    pub fn frontier(&self, u: UserId) -> Option<&ParetoFrontier> {
        self.users.iter().position(|p| p.id == u).map(|i| &self.frontiers[i])
    }

    pub fn frontiers(&self) -> impl Iterator<Item = (UserId, &ParetoFrontier)> {
        self.users.iter().map(|u| u.id).zip(&self.frontiers)
    }

    pub fn index(&self) -> &TargetIndex {
        &self.index
    }
}

impl Engine for Baseline {
    fn step(&mut self, o: ObjectRecord) -> Result<StepOutcome> {
        if !self.seen.insert(o.id) {
            return Err(Error::DuplicateObject(o.id));
        }
        let users = &self.users;
        let updates = self
            .exec
            .map_mut(&mut self.frontiers, |i, f| update_pareto_frontier(&users[i], &o, f));
        let mut outcome = StepOutcome::default();
        for (u, up) in users.iter().zip(&updates) {
            self.index.record(u.id, o.id, up);
            outcome.comparisons.member += up.comparisons;
            if up.accepted {
                outcome.targets.push(u.id);
            }
        }
        outcome.targets.sort();
        self.totals += outcome.comparisons;
        Ok(outcome)
    }

    fn user_frontiers(&self) -> BTreeMap<UserId, BTreeSet<ObjectId>> {
        self.frontiers().map(|(u, f)| (u, f.ids())).collect()
    }

    fn comparisons(&self) -> Comparisons {
        self.totals
    }
}

/// One Baseline step: the users whose frontier now holds `o`.
pub fn baseline_step(engine: &mut Baseline, o: ObjectRecord) -> Result<Vec<UserId>> {
    engine.step(o).map(|s| s.targets)
}
