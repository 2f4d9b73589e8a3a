//! Shared-computation dissemination: filter through a cluster's frontier,
//! then verify survivors against each member's own frontier.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use crate::dominance::{compare, Dominance};
use crate::engine::{Comparisons, Engine, StepOutcome};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::frontier::{update_pareto_frontier, FrontierUpdate, ParetoFrontier, TargetIndex};
use crate::ids::{ClusterId, Holder, ObjectId, UserId};
use crate::profile::{ClusterProfile, ObjectRecord, ProfileKind, UserProfile};

/// Result of the cluster-level filter.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FilterUpdate {
    pub accepted: bool,
    /// Cluster frontier members the object dominated.
    pub evicted: Vec<ObjectId>,
    /// `(user, object)` pairs dropped from member frontiers by the cascade.
    pub member_evictions: Vec<(UserId, ObjectId)>,
    pub comparisons: u64,
}

/// Filter `o` through the cluster frontier. Evicted objects also leave every
/// member frontier; `members` pairs each member's id with its frontier.
pub fn update_pareto_frontier_u(
    cluster: &ClusterProfile,
    o: &ObjectRecord,
    cluster_frontier: &mut ParetoFrontier,
    members: &mut [(UserId, &mut ParetoFrontier)],
) -> FilterUpdate {
    let mut out = FilterUpdate {
        accepted: true,
        ..Default::default()
    };
    for m in cluster_frontier.members() {
        out.comparisons += 1;
        match compare(&o.values, &m.values, &cluster.relations) {
            Dominance::Dominates => out.evicted.push(m.id),
            Dominance::DominatedBy => {
                out.accepted = false;
                break;
            }
            Dominance::Identical | Dominance::Incomparable => {}
        }
    }
    if !out.accepted {
        debug_assert!(out.evicted.is_empty());
        out.evicted.clear();
        return out;
    }
    cluster_frontier.remove_all(&out.evicted);
    for (u, f) in members.iter_mut() {
        for &e in &out.evicted {
            if f.remove(e).is_some() {
                out.member_evictions.push((*u, e));
            }
        }
    }
    cluster_frontier.insert(o.clone());
    out
}

/// One cluster and its members' state.
#[derive(Clone, Debug)]
pub(crate) struct ClusterState {
    pub profile: ClusterProfile,
    pub users: Vec<UserProfile>,
    pub frontier: ParetoFrontier,
    pub member_frontiers: Vec<ParetoFrontier>,
}

/// Per-cluster effect of a step, merged into the shared index afterwards.
#[derive(Debug, Default)]
pub(crate) struct ClusterStep {
    /// Index changes in the order they happened: `(user, object, added)`.
    pub ops: Vec<(UserId, ObjectId, bool)>,
    pub targets: Vec<UserId>,
    pub comparisons: Comparisons,
}

impl ClusterStep {
    pub fn record_member(&mut self, u: UserId, o: ObjectId, up: &FrontierUpdate) {
        self.comparisons.member += up.comparisons;
        self.ops.extend(up.evicted.iter().map(|&e| (u, e, false)));
        if up.accepted {
            self.ops.push((u, o, true));
            self.targets.push(u);
        }
    }

    pub fn apply(self, index: &mut TargetIndex, outcome: &mut StepOutcome) {
        for (u, o, added) in self.ops {
            if added {
                index.add(o, u);
            } else {
                index.remove(o, u);
            }
        }
        outcome.targets.extend(self.targets);
        outcome.comparisons += self.comparisons;
    }
}

impl ClusterState {
    pub fn new(profile: ClusterProfile, all: &[UserProfile]) -> Result<Self> {
        let users: Vec<UserProfile> = profile
            .members
            .iter()
            .map(|id| {
                all.iter()
                    .find(|u| u.id == *id)
                    .cloned()
                    .ok_or_else(|| Error::Config(format!("cluster {} names unknown user {id}", profile.id)))
            })
            .collect::<Result<_>>()?;
        let member_frontiers = users.iter().map(|u| ParetoFrontier::new(Holder::User(u.id))).collect();
        Ok(Self {
            frontier: ParetoFrontier::new(Holder::Cluster(profile.id)),
            profile,
            users,
            member_frontiers,
        })
    }

    fn step(&mut self, o: &ObjectRecord) -> ClusterStep {
        let mut step = ClusterStep::default();
        let mut members: Vec<(UserId, &mut ParetoFrontier)> = self
            .users
            .iter()
            .map(|u| u.id)
            .zip(self.member_frontiers.iter_mut())
            .collect();
        let filter = update_pareto_frontier_u(&self.profile, o, &mut self.frontier, &mut members);
        step.comparisons.cluster += filter.comparisons;
        step.ops
            .extend(filter.member_evictions.iter().map(|&(u, e)| (u, e, false)));
        if filter.accepted {
            for (u, f) in self.users.iter().zip(self.member_frontiers.iter_mut()) {
                let up = update_pareto_frontier(u, o, f);
                step.record_member(u.id, o.id, &up);
            }
        }
        step
    }
}

pub(crate) fn check_partition(users: &[UserProfile], clusters: &[ClusterProfile]) -> Result<()> {
    let mut seen = HashSet::new();
    for c in clusters {
        if c.members.is_empty() {
            return Err(Error::Config(format!("cluster {} is empty", c.id)));
        }
        for u in &c.members {
            if !seen.insert(*u) {
                return Err(Error::Config(format!("user {u} is in more than one cluster")));
            }
        }
    }
    if seen.len() != users.len() || users.iter().any(|u| !seen.contains(&u.id)) {
        return Err(Error::Config("clusters must partition the user set".into()));
    }
    Ok(())
}

/// Frontier maintenance shared within clusters of users. Works with exact
/// common or approximate cluster relations alike.
#[derive(Clone, Debug)]
pub struct FilterThenVerify {
    clusters: Vec<ClusterState>,
    index: TargetIndex,
    seen: HashSet<ObjectId>,
    exec: Execution,
    totals: Comparisons,
}

impl FilterThenVerify {
    /// Clusters are processed in ascending id order.
    pub fn new(users: &[UserProfile], mut clusters: Vec<ClusterProfile>) -> Result<Self> {
        check_partition(users, &clusters)?;
        if clusters.windows(2).any(|w| w[0].kind != w[1].kind) {
            return Err(Error::Config("clusters mix exact and approximate relations".into()));
        }
        clusters.sort_by_key(|c| c.id);
        let clusters = clusters
            .into_iter()
            .map(|c| ClusterState::new(c, users))
            .collect::<Result<_>>()?;
        Ok(Self {
            clusters,
            index: TargetIndex::default(),
            seen: HashSet::new(),
            exec: Execution::default(),
            totals: Comparisons::default(),
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn kind(&self) -> Option<ProfileKind> {
        self.clusters.first().map(|c| c.profile.kind)
    }

    pub fn clusters(&self) -> impl Iterator<Item = &ClusterProfile> {
        self.clusters.iter().map(|c| &c.profile)
    }

    pub fn cluster_frontier(&self, id: ClusterId) -> Option<&ParetoFrontier> {
        self.clusters.iter().find(|c| c.profile.id == id).map(|c| &c.frontier)
    }

    pub fn frontier(&self, u: UserId) -> Option<&ParetoFrontier> {
        self.frontiers().find(|(id, _)| *id == u).map(|(_, f)| f)
    }

    pub fn frontiers(&self) -> impl Iterator<Item = (UserId, &ParetoFrontier)> {
        self.clusters
            .iter()
            .flat_map(|c| c.users.iter().map(|u| u.id).zip(&c.member_frontiers))
    }

    pub fn index(&self) -> &TargetIndex {
        &self.index
    }
}

impl Engine for FilterThenVerify {
    fn step(&mut self, o: ObjectRecord) -> Result<StepOutcome> {
        if !self.seen.insert(o.id) {
            return Err(Error::DuplicateObject(o.id));
        }
        let steps = self.exec.map_mut(&mut self.clusters, |_, c| c.step(&o));
        let mut outcome = StepOutcome::default();
        for s in steps {
            s.apply(&mut self.index, &mut outcome);
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

pub fn filter_then_verify_step(engine: &mut FilterThenVerify, o: ObjectRecord) -> Result<Vec<UserId>> {
    if engine.kind() == Some(ProfileKind::Approximate) {
        return Err(Error::Config("exact step on approximate clusters".into()));
    }
    engine.step(o).map(|s| s.targets)
}

pub fn filter_then_verify_approx_step(engine: &mut FilterThenVerify, o: ObjectRecord) -> Result<Vec<UserId>> {
    if engine.kind() == Some(ProfileKind::ExactCommon) {
        return Err(Error::Config("approximate step on exact clusters".into()));
    }
    engine.step(o).map(|s| s.targets)
}
