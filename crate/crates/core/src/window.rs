//! Count-based sliding windows: frontiers over the W most recent objects,
//! with per-holder buffers that restore objects when their dominators expire.

use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use std::fmt::Write as _;

use crate::dominance::{compare, Dominance};
use crate::engine::{Comparisons, Engine, StepOutcome};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::filter_verify::{check_partition, update_pareto_frontier_u, ClusterStep};
use crate::frontier::{frontier_oracle, update_pareto_frontier, ParetoFrontier, TargetIndex};
use crate::ids::{ClusterId, Holder, ObjectId, UserId};
use crate::profile::{ClusterProfile, ObjectRecord, Preferences, ProfileKind, UserProfile};
use crate::relation::PreferenceRelation;

/// The `capacity` most recent objects.
#[derive(Clone, Debug)]
pub struct Window {
    capacity: usize,
    live: VecDeque<ObjectRecord>,
}

impl Window {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Config("window size must be positive".into()));
        }
        Ok(Self {
            capacity,
            live: VecDeque::with_capacity(capacity + 1),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Admit `o`; returns the object that leaves the window, if any.
    pub fn push(&mut self, o: ObjectRecord) -> Option<ObjectRecord> {
        self.live.push_back(o);
        if self.live.len() > self.capacity {
            self.live.pop_front()
        } else {
            None
        }
    }

    pub fn alive(&self) -> impl Iterator<Item = &ObjectRecord> {
        self.live.iter()
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }
}

/// Alive objects not dominated by any later alive object, in arrival order.
#[derive(Clone, Debug)]
pub struct ParetoBuffer {
    holder: Holder,
    members: Vec<ObjectRecord>,
}

impl ParetoBuffer {
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

    pub fn ids(&self) -> BTreeSet<ObjectId> {
        self.members.iter().map(|m| m.id).collect()
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        self.members.iter().any(|m| m.id == id)
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn remove(&mut self, id: ObjectId) -> bool {
        match self.members.iter().position(|m| m.id == id) {
            Some(i) => {
                self.members.remove(i);
                true
            }
            None => false,
        }
    }

    /// Drop members `o` dominates, then append `o`. Returns the tests performed.
    pub fn refresh(&mut self, o: &ObjectRecord, relations: &[PreferenceRelation]) -> u64 {
        let n = self.members.len() as u64;
        self.members
            .retain(|m| compare(&o.values, &m.values, relations) != Dominance::Dominates);
        self.members.push(o.clone());
        n
    }

    /// No member is dominated by a later member.
    pub fn is_valid<P: Preferences + ?Sized>(&self, profile: &P) -> bool {
        let rels = profile.relations();
        self.members.iter().enumerate().all(|(i, a)| {
            self.members[i + 1..]
                .iter()
                .all(|b| compare(&b.values, &a.values, rels) != Dominance::Dominates)
        })
    }
}

/// Brute-force buffer: objects no later object dominates.
pub fn buffer_oracle<P: Preferences + ?Sized>(alive: &[ObjectRecord], profile: &P) -> BTreeSet<ObjectId> {
    let rels = profile.relations();
    alive
        .iter()
        .enumerate()
        .filter(|(i, o)| {
            alive[i + 1..]
                .iter()
                .all(|p| compare(&p.values, &o.values, rels) != Dominance::Dominates)
        })
        .map(|(_, o)| o.id)
        .collect()
}

/// Brute-force windowed frontier over the alive objects.
pub fn windowed_frontier_oracle<P: Preferences + ?Sized>(alive: &[ObjectRecord], profile: &P) -> BTreeSet<ObjectId> {
    frontier_oracle(alive, profile)
}

/// After `out` left `frontier`, promote buffer objects `out` dominated that no
/// current frontier member dominates. Scans in arrival order; the frontier
/// grows as objects are promoted.
fn mend(
    out: &ObjectRecord,
    relations: &[PreferenceRelation],
    frontier: &mut ParetoFrontier,
    buffer: &ParetoBuffer,
    comparisons: &mut u64,
) -> Vec<ObjectRecord> {
    let mut promoted = Vec::new();
    for b in buffer.members() {
        if b.id == out.id {
            continue;
        }
        *comparisons += 1;
        if compare(&out.values, &b.values, relations) != Dominance::Dominates {
            continue;
        }
        let mut dominated = false;
        for p in frontier.members() {
            *comparisons += 1;
            if compare(&p.values, &b.values, relations) == Dominance::Dominates {
                dominated = true;
                break;
            }
        }
        if !dominated {
            frontier.insert(b.clone());
            promoted.push(b.clone());
        }
    }
    promoted
}

#[derive(Clone, Debug)]
struct UserWindowState {
    profile: UserProfile,
    frontier: ParetoFrontier,
    buffer: ParetoBuffer,
}

impl UserWindowState {
    fn new(profile: UserProfile) -> Self {
        let h = Holder::User(profile.id);
        Self {
            profile,
            frontier: ParetoFrontier::new(h),
            buffer: ParetoBuffer::new(h),
        }
    }

    fn expire(&mut self, out: &ObjectRecord, step: &mut ClusterStep) {
        let u = self.profile.id;
        let rels = &self.profile.relations;
        if self.frontier.remove(out.id).is_some() {
            step.ops.push((u, out.id, false));
            let promoted = mend(
                out,
                rels,
                &mut self.frontier,
                &self.buffer,
                &mut step.comparisons.member,
            );
            step.ops.extend(promoted.iter().map(|p| (u, p.id, true)));
        }
        self.buffer.remove(out.id);
    }

    fn arrive(&mut self, o: &ObjectRecord, step: &mut ClusterStep) {
        let up = update_pareto_frontier(&self.profile, o, &mut self.frontier);
        step.record_member(self.profile.id, o.id, &up);
        step.comparisons.member += self.buffer.refresh(o, &self.profile.relations);
    }
}

/// One row of a step trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRow {
    pub step: u64,
    /// `expire` (after expiry, before arrival) or `arrive`.
    pub phase: &'static str,
    pub holder: Holder,
    pub frontier: Vec<ObjectId>,
    /// `None` for holders without their own buffer.
    pub buffer: Option<Vec<ObjectId>>,
}

fn by_arrival<'a>(objs: impl IntoIterator<Item = &'a ObjectRecord>) -> Vec<ObjectId> {
    let mut v: Vec<&ObjectRecord> = objs.into_iter().collect();
    v.sort_by_key(|o| o.timestamp);
    v.into_iter().map(|o| o.id).collect()
}

fn join(ids: &[ObjectId]) -> String {
    ids.iter().map(|i| format!("o{i}")).collect::<Vec<_>>().join(" ")
}

/// CSV with header `step,phase,holder,frontier,buffer`; lists are space-separated in arrival order.
pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut s = String::from("step,phase,holder,frontier,buffer\n");
    for r in rows {
        let buffer = r.buffer.as_deref().map(join).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.step,
            r.phase,
            r.holder,
            join(&r.frontier),
            buffer
        );
    }
    s
}

/// Shared driver state for both windowed engines.
#[derive(Clone, Debug)]
struct Stream {
    window: Window,
    index: TargetIndex,
    seen: HashSet<ObjectId>,
    exec: Execution,
    totals: Comparisons,
    steps: u64,
}

impl Stream {
    fn new(w: usize) -> Result<Self> {
        Ok(Self {
            window: Window::new(w)?,
            index: TargetIndex::default(),
            seen: HashSet::new(),
            exec: Execution::default(),
            totals: Comparisons::default(),
            steps: 0,
        })
    }

    fn admit(&mut self, o: &ObjectRecord) -> Result<Option<ObjectRecord>> {
        if !self.seen.insert(o.id) {
            return Err(Error::DuplicateObject(o.id));
        }
        self.steps += 1;
        Ok(self.window.push(o.clone()))
    }

    fn merge(&mut self, steps: Vec<ClusterStep>, outcome: &mut StepOutcome) {
        for s in steps {
            s.apply(&mut self.index, outcome);
        }
    }
}

/// Independent per-user windowed frontiers.
#[derive(Clone, Debug)]
pub struct BaselineSw {
    users: Vec<UserWindowState>,
    stream: Stream,
}

impl BaselineSw {
    pub fn new(users: Vec<UserProfile>, window: usize) -> Result<Self> {
        Ok(Self {
            users: users.into_iter().map(UserWindowState::new).collect(),
            stream: Stream::new(window)?,
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.stream.exec = exec;
        self
    }

    pub fn window(&self) -> &Window {
        &self.stream.window
    }

    pub fn index(&self) -> &TargetIndex {
        &self.stream.index
    }

    pub fn frontiers(&self) -> impl Iterator<Item = (UserId, &ParetoFrontier)> {
        self.users.iter().map(|u| (u.profile.id, &u.frontier))
    }

    pub fn frontier(&self, u: UserId) -> Option<&ParetoFrontier> {
        self.users.iter().find(|s| s.profile.id == u).map(|s| &s.frontier)
    }

    pub fn buffer(&self, u: UserId) -> Option<&ParetoBuffer> {
        self.users.iter().find(|s| s.profile.id == u).map(|s| &s.buffer)
    }

    /// Step, calling `observe` between expiry and arrival processing.
    pub fn step_observed(&mut self, o: ObjectRecord, observe: impl FnOnce(&Self)) -> Result<StepOutcome> {
        let out = self.stream.admit(&o)?;
        let mut outcome = StepOutcome::default();
        if let Some(out) = &out {
            let steps = self.stream.exec.map_mut(&mut self.users, |_, u| {
                let mut s = ClusterStep::default();
                u.expire(out, &mut s);
                s
            });
            self.stream.merge(steps, &mut outcome);
        }
        observe(self);
        let steps = self.stream.exec.map_mut(&mut self.users, |_, u| {
            let mut s = ClusterStep::default();
            u.arrive(&o, &mut s);
            s
        });
        self.stream.merge(steps, &mut outcome);
        outcome.targets.sort();
        self.stream.totals += outcome.comparisons;
        Ok(outcome)
    }

    pub fn trace(&self, phase: &'static str) -> Vec<TraceRow> {
        self.users
            .iter()
            .map(|u| TraceRow {
                step: self.stream.steps,
                phase,
                holder: Holder::User(u.profile.id),
                frontier: by_arrival(u.frontier.members()),
                buffer: Some(by_arrival(u.buffer.members())),
            })
            .collect()
    }
}

impl Engine for BaselineSw {
    fn step(&mut self, o: ObjectRecord) -> Result<StepOutcome> {
        self.step_observed(o, |_| {})
    }

    fn user_frontiers(&self) -> BTreeMap<UserId, BTreeSet<ObjectId>> {
        self.frontiers().map(|(u, f)| (u, f.ids())).collect()
    }

    fn comparisons(&self) -> Comparisons {
        self.stream.totals
    }
}

pub fn baseline_sw_step(engine: &mut BaselineSw, o: ObjectRecord) -> Result<Vec<UserId>> {
    engine.step(o).map(|s| s.targets)
}

#[derive(Clone, Debug)]
struct ClusterWindowState {
    profile: ClusterProfile,
    users: Vec<UserProfile>,
    frontier: ParetoFrontier,
    buffer: ParetoBuffer,
    member_frontiers: Vec<ParetoFrontier>,
}

impl ClusterWindowState {
    fn new(profile: ClusterProfile, all: &[UserProfile]) -> Result<Self> {
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
        let h = Holder::Cluster(profile.id);
        Ok(Self {
            member_frontiers: users.iter().map(|u| ParetoFrontier::new(Holder::User(u.id))).collect(),
            users,
            frontier: ParetoFrontier::new(h),
            buffer: ParetoBuffer::new(h),
            profile,
        })
    }

    fn expire(&mut self, out: &ObjectRecord) -> ClusterStep {
        let mut step = ClusterStep::default();
        let mut promoted = Vec::new();
        if self.frontier.remove(out.id).is_some() {
            promoted = mend(
                out,
                &self.profile.relations,
                &mut self.frontier,
                &self.buffer,
                &mut step.comparisons.cluster,
            );
        }
        let promoted_ids: HashSet<ObjectId> = promoted.iter().map(|p| p.id).collect();
        let approximate = self.profile.kind == ProfileKind::Approximate;
        for (u, f) in self.users.iter().zip(self.member_frontiers.iter_mut()) {
            let rels = &u.relations;
            if f.remove(out.id).is_some() {
                step.ops.push((u.id, out.id, false));
            }
            // Candidates: objects new to the cluster frontier, and cluster frontier
            // objects this member rejected that the expired object dominated.
            let mut candidates: Vec<&ObjectRecord> = Vec::new();
            for b in self.frontier.members() {
                if promoted_ids.contains(&b.id) {
                    candidates.push(b);
                } else if !f.contains(b.id) {
                    step.comparisons.member += 1;
                    if compare(&out.values, &b.values, rels) == Dominance::Dominates {
                        candidates.push(b);
                    }
                }
            }
            candidates.sort_by_key(|b| b.timestamp);
            for b in candidates {
                let mut dominated = false;
                for p in self.frontier.members() {
                    if p.id == b.id {
                        continue;
                    }
                    step.comparisons.member += 1;
                    if compare(&p.values, &b.values, rels) == Dominance::Dominates {
                        dominated = true;
                        break;
                    }
                }
                if dominated {
                    continue;
                }
                // Under approximate relations a member admitted while b was
                // filtered out may be dominated by b; exact members never are.
                if approximate {
                    let mut beaten = Vec::new();
                    for m in f.members() {
                        step.comparisons.member += 1;
                        if compare(&b.values, &m.values, rels) == Dominance::Dominates {
                            beaten.push(m.id);
                        }
                    }
                    f.remove_all(&beaten);
                    step.ops.extend(beaten.into_iter().map(|m| (u.id, m, false)));
                }
                f.insert(b.clone());
                step.ops.push((u.id, b.id, true));
            }
        }
        self.buffer.remove(out.id);
        step
    }

    fn arrive(&mut self, o: &ObjectRecord) -> ClusterStep {
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
        step.comparisons.cluster += self.buffer.refresh(o, &self.profile.relations);
        step
    }
}

/// Windowed filter-then-verify with one shared buffer per cluster. Works with
/// exact common or approximate cluster relations alike.
#[derive(Clone, Debug)]
pub struct FilterThenVerifySw {
    clusters: Vec<ClusterWindowState>,
    stream: Stream,
}

impl FilterThenVerifySw {
    pub fn new(users: &[UserProfile], mut clusters: Vec<ClusterProfile>, window: usize) -> Result<Self> {
        check_partition(users, &clusters)?;
        if clusters.windows(2).any(|w| w[0].kind != w[1].kind) {
            return Err(Error::Config("clusters mix exact and approximate relations".into()));
        }
        clusters.sort_by_key(|c| c.id);
        Ok(Self {
            clusters: clusters
                .into_iter()
                .map(|c| ClusterWindowState::new(c, users))
                .collect::<Result<_>>()?,
            stream: Stream::new(window)?,
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.stream.exec = exec;
        self
    }

    pub fn kind(&self) -> Option<ProfileKind> {
        self.clusters.first().map(|c| c.profile.kind)
    }

    pub fn window(&self) -> &Window {
        &self.stream.window
    }

    pub fn index(&self) -> &TargetIndex {
        &self.stream.index
    }

    pub fn clusters(&self) -> impl Iterator<Item = &ClusterProfile> {
        self.clusters.iter().map(|c| &c.profile)
    }

    pub fn cluster_frontier(&self, id: ClusterId) -> Option<&ParetoFrontier> {
        self.clusters.iter().find(|c| c.profile.id == id).map(|c| &c.frontier)
    }

    pub fn cluster_buffer(&self, id: ClusterId) -> Option<&ParetoBuffer> {
        self.clusters.iter().find(|c| c.profile.id == id).map(|c| &c.buffer)
    }

    pub fn frontiers(&self) -> impl Iterator<Item = (UserId, &ParetoFrontier)> {
        self.clusters
            .iter()
            .flat_map(|c| c.users.iter().map(|u| u.id).zip(&c.member_frontiers))
    }

    pub fn frontier(&self, u: UserId) -> Option<&ParetoFrontier> {
        self.frontiers().find(|(id, _)| *id == u).map(|(_, f)| f)
    }

    pub fn step_observed(&mut self, o: ObjectRecord, observe: impl FnOnce(&Self)) -> Result<StepOutcome> {
        let out = self.stream.admit(&o)?;
        let mut outcome = StepOutcome::default();
        if let Some(out) = &out {
            let steps = self.stream.exec.map_mut(&mut self.clusters, |_, c| c.expire(out));
            self.stream.merge(steps, &mut outcome);
        }
        observe(self);
        let steps = self.stream.exec.map_mut(&mut self.clusters, |_, c| c.arrive(&o));
        self.stream.merge(steps, &mut outcome);
        outcome.targets.sort();
        self.stream.totals += outcome.comparisons;
        Ok(outcome)
    }

    /// Cluster rows (with buffers) followed by their members' rows.
    pub fn trace(&self, phase: &'static str) -> Vec<TraceRow> {
        let mut rows = Vec::new();
        for c in &self.clusters {
            rows.push(TraceRow {
                step: self.stream.steps,
                phase,
                holder: Holder::Cluster(c.profile.id),
                frontier: by_arrival(c.frontier.members()),
                buffer: Some(by_arrival(c.buffer.members())),
            });
            for (u, f) in c.users.iter().zip(&c.member_frontiers) {
                rows.push(TraceRow {
                    step: self.stream.steps,
                    phase,
                    holder: Holder::User(u.id),
                    frontier: by_arrival(f.members()),
                    buffer: None,
                });
            }
        }
        rows
    }
}

impl Engine for FilterThenVerifySw {
    fn step(&mut self, o: ObjectRecord) -> Result<StepOutcome> {
        self.step_observed(o, |_| {})
    }

    fn user_frontiers(&self) -> BTreeMap<UserId, BTreeSet<ObjectId>> {
        self.frontiers().map(|(u, f)| (u, f.ids())).collect()
    }

    fn comparisons(&self) -> Comparisons {
        self.stream.totals
    }
}

pub fn ftv_sw_step(engine: &mut FilterThenVerifySw, o: ObjectRecord) -> Result<Vec<UserId>> {
    if engine.kind() == Some(ProfileKind::Approximate) {
        return Err(Error::Config("exact step on approximate clusters".into()));
    }
    engine.step(o).map(|s| s.targets)
}

pub fn ftv_approx_sw_step(engine: &mut FilterThenVerifySw, o: ObjectRecord) -> Result<Vec<UserId>> {
    if engine.kind() == Some(ProfileKind::ExactCommon) {
        return Err(Error::Config("approximate step on exact clusters".into()));
    }
    engine.step(o).map(|s| s.targets)
}
