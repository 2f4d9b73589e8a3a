//! Continuous Pareto frontiers over categorical attributes for many users
//! whose preferences are strict partial orders.

pub mod approx;
pub mod bitmatrix;
pub mod clustering;
pub mod dominance;
pub mod engine;
pub mod error;
pub mod exec;
pub mod filter_verify;
pub mod frontier;
pub mod harness;
pub mod ids;
pub mod ingest;
pub mod profile;
pub mod relation;
pub mod schema;
pub mod simulate;
pub mod window;
pub mod workload;

pub use dominance::{compare, dominates, Dominance};
pub use engine::{Comparisons, Engine, StepOutcome};
pub use error::{Error, Result};
pub use exec::Execution;
pub use frontier::{
    baseline_step, frontier_oracle, update_pareto_frontier, Baseline, FrontierUpdate, ParetoFrontier, TargetIndex,
};
pub use ids::{AttributeId, ClusterId, Holder, ObjectId, Rational, UserId, ValueId};
pub use profile::{ClusterProfile, ObjectRecord, Preferences, ProfileKind, UserProfile};
pub use relation::{
    intersect_relations, maximal_values, min_distance_weight, relation_from_edges, transitive_reduction, HasseView,
    PreferenceRelation,
};
pub use schema::{Attribute, AttributeSchema, Bin, Binning};
