//! Seeded synthetic workloads: users are noisy copies of a few archetype
//! profiles, objects are uniform over the value domains.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::ids::{AttributeId, ObjectId, UserId, ValueId};
use crate::ingest::Dataset;
use crate::profile::{ObjectRecord, UserProfile};
use crate::relation::PreferenceRelation;
use crate::schema::AttributeSchema;

#[derive(Clone, Debug, PartialEq)]
pub struct WorkloadSpec {
    pub seed: u64,
    pub users: usize,
    pub archetypes: usize,
    pub objects: usize,
    pub attributes: usize,
    pub domain_size: usize,
    /// Probability that an archetype orders two values, before closure.
    pub density: f64,
    /// Probability that a user drops each of the archetype's Hasse edges.
    pub drop: f64,
    /// Random tuples each user tries to add per attribute.
    pub insert: usize,
    pub window: Option<usize>,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        Self {
            seed: 7,
            users: 100,
            archetypes: 5,
            objects: 50_000,
            attributes: 4,
            domain_size: 8,
            density: 0.6,
            drop: 0.005,
            insert: 1,
            window: None,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("users", self.users),
            ("archetypes", self.archetypes),
            ("attributes", self.attributes),
            ("domain size", self.domain_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.archetypes > self.users {
            return Err(Error::Config("more archetypes than users".into()));
        }
        if self.window == Some(0) {
            return Err(Error::Config("window size must be positive".into()));
        }
        for (name, p) in [("density", self.density), ("drop", self.drop)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Workload {
    pub schema: AttributeSchema,
    pub users: Vec<UserProfile>,
    pub objects: Vec<ObjectRecord>,
    /// Archetype index of each user, aligned with `users`.
    pub archetype_of: Vec<usize>,
}

impl Workload {
    pub fn dataset(&self) -> Dataset {
        Dataset {
            schema: self.schema.clone(),
            users: self.users.clone(),
            objects: self.objects.clone(),
        }
    }

    /// Users grouped by archetype, ascending.
    pub fn ground_truth(&self) -> Vec<Vec<UserId>> {
        let k = self.archetype_of.iter().max().map_or(0, |m| m + 1);
        let mut groups = vec![Vec::new(); k];
        for (u, &a) in self.users.iter().zip(&self.archetype_of) {
            groups[a].push(u.id);
        }
        groups
    }
}

fn random_relation<R: Rng>(rng: &mut R, d: AttributeId, n: usize, density: f64) -> PreferenceRelation {
    let mut perm: Vec<u32> = (0..n as u32).collect();
    perm.shuffle(rng);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(density) {
                edges.push((ValueId(perm[i]), ValueId(perm[j])));
            }
        }
    }
    PreferenceRelation::from_edges(d, n, &edges).expect("edges follow one permutation")
}

fn perturb<R: Rng>(rng: &mut R, base: &PreferenceRelation, drop: f64, insert: usize) -> PreferenceRelation {
    let n = base.domain_size();
    let kept: Vec<_> = base
        .hasse()
        .edges()
        .into_iter()
        .filter(|_| !rng.gen_bool(drop))
        .collect();
    let mut r = PreferenceRelation::from_edges(base.attribute(), n, &kept).expect("subset of an order");
    for _ in 0..insert {
        let x = ValueId(rng.gen_range(0..n as u32));
        let y = ValueId(rng.gen_range(0..n as u32));
        r.try_insert(x, y);
    }
    r
}

/// Deterministic under `spec.seed`.
pub fn generate_workload(spec: &WorkloadSpec) -> Result<Workload> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let schema = AttributeSchema::uniform(spec.attributes, spec.domain_size);
    let archetypes: Vec<Vec<PreferenceRelation>> = (0..spec.archetypes)
        .map(|_| {
            schema
                .ids()
                .map(|d| random_relation(&mut rng, d, spec.domain_size, spec.density))
                .collect()
        })
        .collect();
    // Round-robin assignment keeps archetype groups within one of each other in size.
    let archetype_of: Vec<usize> = (0..spec.users).map(|u| u % spec.archetypes).collect();
    let users = archetype_of
        .iter()
        .enumerate()
        .map(|(u, &a)| {
            let relations = archetypes[a]
                .iter()
                .map(|r| perturb(&mut rng, r, spec.drop, spec.insert))
                .collect();
            UserProfile::new(UserId(u as u32), relations)
        })
        .collect();
    let objects = (0..spec.objects)
        .map(|i| {
            let values = (0..spec.attributes)
                .map(|_| ValueId(rng.gen_range(0..spec.domain_size as u32)))
                .collect();
            ObjectRecord::new(ObjectId(i as u64), values, i as u64 + 1)
        })
        .collect();
    Ok(Workload {
        schema,
        users,
        objects,
        archetype_of,
    })
}
