use std::collections::{BTreeMap, BTreeSet};

use crate::error::Result;
use crate::ids::{ObjectId, UserId};
use crate::profile::ObjectRecord;

/// Dominance tests performed, split by level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Comparisons {
    /// Tests against cluster-level (virtual user) state.
    pub cluster: u64,
    /// Tests against individual users' state.
    pub member: u64,
}

impl Comparisons {
    pub fn total(&self) -> u64 {
        self.cluster + self.member
    }
}

impl std::ops::AddAssign for Comparisons {
    fn add_assign(&mut self, rhs: Self) {
        self.cluster += rhs.cluster;
        self.member += rhs.member;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct StepOutcome {
    /// Users whose frontier holds the arriving object after the step, ascending.
    pub targets: Vec<UserId>,
    pub comparisons: Comparisons,
}

/// A stream processor that maintains one frontier per user.
pub trait Engine {
    fn step(&mut self, o: ObjectRecord) -> Result<StepOutcome>;

    /// Every user with the ids of its current frontier, ascending.
    fn user_frontiers(&self) -> BTreeMap<UserId, BTreeSet<ObjectId>>;

    fn comparisons(&self) -> Comparisons;
}
