//! Random instances and a brute-force reference shared by the integration
//! suites. Nothing here calls the engines' dominance code: relations are
//! plain pair sets closed by hand, and frontiers come from full scans.

#![allow(dead_code, clippy::needless_range_loop)]

pub mod fixtures;

use std::collections::{BTreeSet, HashSet};

use pareto_stream::approx::ApproxParams;
use pareto_stream::clustering::build_profiles;
use pareto_stream::filter_verify::FilterThenVerify;
use pareto_stream::window::{BaselineSw, FilterThenVerifySw};
use pareto_stream::{
    AttributeId, Baseline, ClusterProfile, Engine, Execution, ObjectId, ObjectRecord, PreferenceRelation, ProfileKind,
    UserId, UserProfile, ValueId,
};
use rand::seq::SliceRandom;
use rand::Rng;

pub type PairSet = HashSet<(u32, u32)>;

pub fn close(n: usize, pairs: &PairSet) -> PairSet {
    let mut m = vec![vec![false; n]; n];
    for &(x, y) in pairs {
        m[x as usize][y as usize] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if m[i][k] {
                for j in 0..n {
                    if m[k][j] {
                        m[i][j] = true;
                    }
                }
            }
        }
    }
    let mut out = PairSet::new();
    for i in 0..n {
        for j in 0..n {
            if m[i][j] {
                out.insert((i as u32, j as u32));
            }
        }
    }
    out
}

/// `a` dominates `b` under dense relation matrices: at least as good
/// everywhere, strictly better somewhere.
pub fn dominates(rels: &[Vec<Vec<bool>>], a: &[u32], b: &[u32]) -> bool {
    let mut strict = false;
    for (d, r) in rels.iter().enumerate() {
        if a[d] != b[d] {
            if !r[a[d] as usize][b[d] as usize] {
                return false;
            }
            strict = true;
        }
    }
    strict
}

#[derive(Clone, Debug)]
pub struct Instance {
    pub domains: Vec<usize>,
    /// Closed relations per user, per attribute.
    pub users: Vec<Vec<PairSet>>,
    pub objects: Vec<Vec<u32>>,
    /// Partition of user indices.
    pub clusters: Vec<Vec<usize>>,
}

fn random_order<R: Rng>(rng: &mut R, n: usize, p: f64) -> PairSet {
    let mut perm: Vec<u32> = (0..n as u32).collect();
    perm.shuffle(rng);
    let mut s = PairSet::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                s.insert((perm[i], perm[j]));
            }
        }
    }
    close(n, &s)
}

/// Copy of `base` with some tuples dropped, plus a few tuples added when
/// their reverse is absent.
fn perturb<R: Rng>(rng: &mut R, n: usize, base: &PairSet) -> PairSet {
    let mut s: PairSet = base.iter().copied().filter(|_| !rng.gen_bool(0.15)).collect();
    s = close(n, &s);
    for _ in 0..rng.gen_range(0..3) {
        let (x, y) = (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32));
        if x != y && !s.contains(&(y, x)) {
            s.insert((x, y));
            s = close(n, &s);
        }
    }
    s
}

pub struct Caps {
    pub objects: usize,
    pub users: usize,
    pub attributes: usize,
    pub domain: usize,
}

pub const CAPS: Caps = Caps {
    objects: 200,
    users: 20,
    attributes: 4,
    domain: 8,
};

pub fn random_instance<R: Rng>(rng: &mut R, caps: &Caps) -> Instance {
    let attrs = rng.gen_range(1..=caps.attributes);
    let domains: Vec<usize> = (0..attrs).map(|_| rng.gen_range(1..=caps.domain)).collect();
    let n_users = rng.gen_range(1..=caps.users);
    let n_objects = rng.gen_range(1..=caps.objects);

    let k = rng.gen_range(1..=n_users);
    let mut labels: Vec<usize> = (0..n_users)
        .map(|i| if i < k { i } else { rng.gen_range(0..k) })
        .collect();
    labels.shuffle(rng);
    let mut clusters = vec![Vec::new(); k];
    for (u, &c) in labels.iter().enumerate() {
        clusters[c].push(u);
    }

    let archetypes: Vec<Vec<PairSet>> = (0..k)
        .map(|_| {
            let p = rng.gen_range(0.1..0.7);
            domains.iter().map(|&n| random_order(rng, n, p)).collect()
        })
        .collect();
    let users = labels
        .iter()
        .map(|&c| {
            if rng.gen_bool(0.15) {
                let p = rng.gen_range(0.1..0.7);
                domains.iter().map(|&n| random_order(rng, n, p)).collect()
            } else {
                archetypes[c]
                    .iter()
                    .zip(&domains)
                    .map(|(r, &n)| perturb(rng, n, r))
                    .collect()
            }
        })
        .collect();
    let objects = (0..n_objects)
        .map(|_| domains.iter().map(|&n| rng.gen_range(0..n as u32)).collect())
        .collect();
    Instance {
        domains,
        users,
        objects,
        clusters,
    }
}

impl Instance {
    pub fn user_id(u: usize) -> UserId {
        UserId(u as u32 + 1)
    }

    pub fn profiles(&self) -> Vec<UserProfile> {
        self.users
            .iter()
            .enumerate()
            .map(|(i, rels)| {
                let relations = rels
                    .iter()
                    .enumerate()
                    .map(|(d, r)| {
                        let mut edges: Vec<_> = r.iter().map(|&(x, y)| (ValueId(x), ValueId(y))).collect();
                        edges.sort();
                        PreferenceRelation::from_edges(AttributeId(d as u32), self.domains[d], &edges).unwrap()
                    })
                    .collect();
                UserProfile::new(Self::user_id(i), relations)
            })
            .collect()
    }

    pub fn records(&self) -> Vec<ObjectRecord> {
        self.objects
            .iter()
            .enumerate()
            .map(|(i, v)| ObjectRecord::new(ObjectId(i as u64), v.iter().map(|&x| ValueId(x)).collect(), i as u64))
            .collect()
    }

    pub fn partition(&self) -> Vec<Vec<UserId>> {
        self.clusters
            .iter()
            .map(|c| c.iter().map(|&u| Self::user_id(u)).collect())
            .collect()
    }

    pub fn cluster_profiles(&self, kind: ProfileKind) -> Vec<ClusterProfile> {
        build_profiles(
            &self.profiles(),
            &self.partition(),
            kind,
            &ApproxParams::default(),
            Execution::Sequential,
        )
        .unwrap()
    }

    /// Per-user object dominance matrices, `m[i][j]` = object i dominates j.
    pub fn dominance(&self) -> Vec<Vec<Vec<bool>>> {
        self.users.iter().map(|rels| self.dominance_under(rels)).collect()
    }

    pub fn dominance_under(&self, rels: &[PairSet]) -> Vec<Vec<bool>> {
        let dense: Vec<Vec<Vec<bool>>> = rels
            .iter()
            .zip(&self.domains)
            .map(|(r, &n)| {
                (0..n as u32)
                    .map(|x| (0..n as u32).map(|y| r.contains(&(x, y))).collect())
                    .collect()
            })
            .collect();
        let o = &self.objects;
        (0..o.len())
            .map(|i| (0..o.len()).map(|j| dominates(&dense, &o[i], &o[j])).collect())
            .collect()
    }

    /// Common relations of a cluster, by plain set intersection.
    pub fn common(&self, members: &[usize]) -> Vec<PairSet> {
        (0..self.domains.len())
            .map(|d| {
                let mut s = self.users[members[0]][d].clone();
                for &u in &members[1..] {
                    s.retain(|p| self.users[u][d].contains(p));
                }
                s
            })
            .collect()
    }
}

/// Frontiers after each step: for step t, one id set per user.
pub fn append_oracle(dom: &[Vec<Vec<bool>>], n: usize) -> Vec<Vec<BTreeSet<ObjectId>>> {
    let mut dominated = vec![vec![false; n]; dom.len()];
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let mut row = Vec::with_capacity(dom.len());
        for (u, m) in dom.iter().enumerate() {
            dominated[u][t] = (0..t).any(|p| m[p][t]);
            for q in 0..t {
                if m[t][q] {
                    dominated[u][q] = true;
                }
            }
            row.push(
                (0..=t)
                    .filter(|&q| !dominated[u][q])
                    .map(|q| ObjectId(q as u64))
                    .collect(),
            );
        }
        out.push(row);
    }
    out
}

/// Windowed frontiers after each step, from dominator counts over alive objects.
pub fn window_oracle(dom: &[Vec<Vec<bool>>], n: usize, w: usize) -> Vec<Vec<BTreeSet<ObjectId>>> {
    let mut count = vec![vec![0usize; n]; dom.len()];
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let lo = (t + 1).saturating_sub(w);
        let mut row = Vec::with_capacity(dom.len());
        for (u, m) in dom.iter().enumerate() {
            if t >= w {
                let gone = t - w;
                for q in lo..t {
                    if m[gone][q] {
                        count[u][q] -= 1;
                    }
                }
            }
            count[u][t] = (lo..t).filter(|&p| m[p][t]).count();
            for q in lo..t {
                if m[t][q] {
                    count[u][q] += 1;
                }
            }
            row.push(
                (lo..=t)
                    .filter(|&q| count[u][q] == 0)
                    .map(|q| ObjectId(q as u64))
                    .collect(),
            );
        }
        out.push(row);
    }
    out
}

/// Windowed buffers after each step: alive objects that no later alive
/// object dominates. A later object outlives the one it beats, so the mark
/// is permanent.
pub fn window_buffers(dom: &[Vec<Vec<bool>>], n: usize, w: usize) -> Vec<Vec<BTreeSet<ObjectId>>> {
    let mut beaten = vec![vec![false; n]; dom.len()];
    let mut out = Vec::with_capacity(n);
    for t in 0..n {
        let lo = (t + 1).saturating_sub(w);
        let mut row = Vec::with_capacity(dom.len());
        for (u, m) in dom.iter().enumerate() {
            for q in lo..t {
                if m[t][q] {
                    beaten[u][q] = true;
                }
            }
            row.push(
                (lo..=t)
                    .filter(|&q| !beaten[u][q])
                    .map(|q| ObjectId(q as u64))
                    .collect(),
            );
        }
        out.push(row);
    }
    out
}

pub const WINDOWS: [usize; 4] = [1, 4, 16, 64];

/// Violation counts for one instance.
#[derive(Clone, Debug, Default)]
pub struct Tally {
    pub steps: usize,
    pub equivalence: Vec<String>,
    pub theorems: Vec<String>,
}

impl Tally {
    pub fn merge(&mut self, other: Tally) {
        self.steps += other.steps;
        self.equivalence.extend(other.equivalence);
        self.theorems.extend(other.theorems);
    }
}

fn subset(a: &BTreeSet<ObjectId>, b: &BTreeSet<ObjectId>) -> bool {
    a.is_subset(b)
}

/// No member of `set` dominates another.
fn antichain(m: &[Vec<bool>], set: &BTreeSet<ObjectId>) -> bool {
    set.iter().all(|a| set.iter().all(|b| !m[a.0 as usize][b.0 as usize]))
}

/// Run the exact engines on the instance in lockstep with the reference.
/// With `theorems` set, the approximate engines also run and the structural
/// laws are checked at every step.
pub fn check_instance(inst: &Instance, seed: u64, theorems: bool) -> Tally {
    let mut tally = Tally::default();
    let users = inst.profiles();
    let records = inst.records();
    let n = records.len();
    let dom = inst.dominance();
    let exact = inst.cluster_profiles(ProfileKind::ExactCommon);
    let approx = if theorems {
        inst.cluster_profiles(ProfileKind::Approximate)
    } else {
        Vec::new()
    };
    let ctx = |what: &str, t: usize| format!("seed {seed} step {t}: {what}");

    // Approximate relations contain the common ones.
    for (c, members) in inst.clusters.iter().enumerate().filter(|_| theorems) {
        let common = inst.common(members);
        for (d, r) in approx[c].relations.iter().enumerate() {
            if !common[d].iter().all(|&(x, y)| r.prefers(ValueId(x), ValueId(y))) {
                tally.theorems.push(format!(
                    "seed {seed}: approx relation misses a common tuple (cluster {c}, attr {d})"
                ));
            }
        }
    }

    let uids: Vec<UserId> = (0..inst.users.len()).map(Instance::user_id).collect();
    let exec = if seed.is_multiple_of(2) {
        Execution::Sequential
    } else {
        Execution::Parallel
    };

    // Append-only.
    let want = append_oracle(&dom, n);
    let mut base = Baseline::new(users.clone()).with_execution(exec);
    let mut ftv = FilterThenVerify::new(&users, exact.clone())
        .unwrap()
        .with_execution(exec);
    let mut ftva = theorems.then(|| {
        FilterThenVerify::new(&users, approx.clone())
            .unwrap()
            .with_execution(exec)
    });
    for (t, o) in records.iter().enumerate() {
        tally.steps += 1;
        let b = base.step(o.clone()).unwrap();
        let f = ftv.step(o.clone()).unwrap();
        let expect: Vec<UserId> = uids
            .iter()
            .enumerate()
            .filter(|(u, _)| want[t][*u].contains(&o.id))
            .map(|(_, id)| *id)
            .collect();
        if b.targets != expect || f.targets != expect {
            tally
                .equivalence
                .push(ctx("append-only targets differ from the reference", t));
        }
        for (u, id) in uids.iter().enumerate() {
            if base.frontier(*id).unwrap().ids() != want[t][u] || ftv.frontier(*id).unwrap().ids() != want[t][u] {
                tally
                    .equivalence
                    .push(ctx(&format!("append-only frontier of user {id} differs"), t));
            }
        }
        if !base.index().is_consistent(base.frontiers()) || !ftv.index().is_consistent(ftv.frontiers()) {
            tally.equivalence.push(ctx("target index out of sync", t));
        }
        let Some(ftva) = ftva.as_mut() else { continue };
        ftva.step(o.clone()).unwrap();
        for c in ftv.clusters() {
            let pu = ftv.cluster_frontier(c.id).unwrap().ids();
            let pu_hat = ftva.cluster_frontier(c.id).unwrap().ids();
            if !subset(&pu_hat, &pu) {
                tally
                    .theorems
                    .push(ctx("approximate cluster frontier not within exact one", t));
            }
            for m in &c.members {
                let pc = ftv.frontier(*m).unwrap().ids();
                let pc_hat = ftva.frontier(*m).unwrap().ids();
                if !subset(&pc, &pu) {
                    tally.theorems.push(ctx("member frontier escapes cluster frontier", t));
                }
                if !subset(&pc_hat, &pu_hat) {
                    tally.theorems.push(ctx(
                        "approximate member frontier escapes approximate cluster frontier",
                        t,
                    ));
                }
                if !pu_hat.intersection(&pc).all(|o| pc_hat.contains(o)) {
                    tally.theorems.push(ctx(
                        "approximate frontier misses a true Pareto object it keeps at cluster level",
                        t,
                    ));
                }
                if !antichain(&dom[m.index() - 1], &pc_hat) {
                    tally
                        .theorems
                        .push(ctx("approximate member frontier holds a dominated object", t));
                }
            }
        }
    }

    // Windowed.
    let cluster_dom: Vec<Vec<Vec<bool>>> = inst
        .clusters
        .iter()
        .map(|m| inst.dominance_under(&inst.common(m)))
        .collect();
    for w in WINDOWS {
        let want = window_oracle(&dom, n, w);
        let want_buf = window_buffers(&dom, n, w);
        let want_cluster = window_oracle(&cluster_dom, n, w);
        let want_cluster_buf = window_buffers(&cluster_dom, n, w);
        let mut bsw = BaselineSw::new(users.clone(), w).unwrap().with_execution(exec);
        let mut fsw = FilterThenVerifySw::new(&users, exact.clone(), w)
            .unwrap()
            .with_execution(exec);
        let mut fswa = theorems.then(|| {
            FilterThenVerifySw::new(&users, approx.clone(), w)
                .unwrap()
                .with_execution(exec)
        });
        let mut evicted: Vec<HashSet<ObjectId>> = vec![HashSet::new(); uids.len()];
        let mut last_buffer: Vec<BTreeSet<ObjectId>> = vec![BTreeSet::new(); uids.len()];
        for (t, o) in records.iter().enumerate() {
            tally.steps += 1;
            let lo = (t + 1).saturating_sub(w);
            let b = bsw.step(o.clone()).unwrap();
            let f = fsw.step(o.clone()).unwrap();
            let expect: Vec<UserId> = uids
                .iter()
                .enumerate()
                .filter(|(u, _)| want[t][*u].contains(&o.id))
                .map(|(_, id)| *id)
                .collect();
            if b.targets != expect || f.targets != expect {
                tally
                    .equivalence
                    .push(ctx(&format!("W={w} targets differ from the reference"), t));
            }
            for (u, id) in uids.iter().enumerate() {
                let pb = bsw.frontier(*id).unwrap().ids();
                if pb != want[t][u] || fsw.frontier(*id).unwrap().ids() != want[t][u] {
                    tally
                        .equivalence
                        .push(ctx(&format!("W={w} frontier of user {id} differs"), t));
                }
            }
            if !bsw.index().is_consistent(bsw.frontiers()) || !fsw.index().is_consistent(fsw.frontiers()) {
                tally
                    .equivalence
                    .push(ctx(&format!("W={w} target index out of sync"), t));
            }
            for (ci, c) in exact.iter().enumerate() {
                if fsw.cluster_frontier(c.id).unwrap().ids() != want_cluster[t][ci] {
                    tally
                        .equivalence
                        .push(ctx(&format!("W={w} cluster frontier differs"), t));
                }
            }
            let Some(fswa) = fswa.as_mut() else { continue };
            fswa.step(o.clone()).unwrap();
            for (u, id) in uids.iter().enumerate() {
                let pb = bsw.frontier(*id).unwrap().ids();
                let buf = bsw.buffer(*id).unwrap().ids();
                if buf != want_buf[t][u] {
                    tally.theorems.push(ctx(
                        &format!("W={w} buffer of user {id} is not the set of objects undominated by later ones"),
                        t,
                    ));
                }
                if !subset(&pb, &buf) {
                    tally
                        .theorems
                        .push(ctx(&format!("W={w} frontier not within buffer"), t));
                }
                // Objects that left the buffer while alive never come back.
                for gone in last_buffer[u].difference(&buf) {
                    if gone.0 as usize >= lo {
                        evicted[u].insert(*gone);
                    }
                }
                if pb.iter().any(|x| evicted[u].contains(x)) {
                    tally
                        .theorems
                        .push(ctx(&format!("W={w} evicted object re-entered a frontier"), t));
                }
                last_buffer[u] = buf;
            }
            for (ci, c) in exact.iter().enumerate() {
                let pu = fsw.cluster_frontier(c.id).unwrap().ids();
                let pbu = fsw.cluster_buffer(c.id).unwrap().ids();
                let pu_hat = fswa.cluster_frontier(c.id).unwrap().ids();
                if pbu != want_cluster_buf[t][ci] || !subset(&pu, &pbu) {
                    tally.theorems.push(ctx(&format!("W={w} cluster buffer law"), t));
                }
                if !subset(&pu_hat, &pu) {
                    tally.theorems.push(ctx(
                        &format!("W={w} approximate cluster frontier not within exact one"),
                        t,
                    ));
                }
                for m in &c.members {
                    let pc = fsw.frontier(*m).unwrap().ids();
                    let pc_hat = fswa.frontier(*m).unwrap().ids();
                    let pbc = bsw.buffer(*m).unwrap().ids();
                    if !subset(&pc, &pu) {
                        tally
                            .theorems
                            .push(ctx(&format!("W={w} member frontier escapes cluster frontier"), t));
                    }
                    if !subset(&pbc, &pbu) {
                        tally
                            .theorems
                            .push(ctx(&format!("W={w} member buffer escapes cluster buffer"), t));
                    }
                    if !subset(&pc_hat, &pu_hat) {
                        tally.theorems.push(ctx(
                            &format!("W={w} approximate member frontier escapes approximate cluster frontier"),
                            t,
                        ));
                    }
                    if !pu_hat.intersection(&pc).all(|x| pc_hat.contains(x)) {
                        tally.theorems.push(ctx(
                            &format!(
                                "W={w} approximate frontier misses a true Pareto object it keeps at cluster level"
                            ),
                            t,
                        ));
                    }
                    if !antichain(&dom[m.index() - 1], &pc_hat) {
                        tally.theorems.push(ctx(
                            &format!("W={w} approximate member frontier holds a dominated object"),
                            t,
                        ));
                    }
                }
            }
        }
    }
    tally
}
