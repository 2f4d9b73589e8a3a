use std::sync::Arc;

use crate::error::{Error, Result};
use crate::ids::{ClusterId, ObjectId, UserId, ValueId};
use crate::relation::PreferenceRelation;
use crate::schema::AttributeSchema;

/// An object: one value per schema attribute plus its arrival index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectRecord {
    pub id: ObjectId,
    pub values: Arc<[ValueId]>,
    pub timestamp: u64,
}

impl ObjectRecord {
    pub fn new(id: ObjectId, values: Vec<ValueId>, timestamp: u64) -> Self {
        Self {
            id,
            values: values.into(),
            timestamp,
        }
    }

    pub fn check(&self, schema: &AttributeSchema) -> Result<()> {
        if self.values.len() != schema.len() {
            return Err(Error::SchemaMismatch {
                expected: schema.len(),
                found: self.values.len(),
            });
        }
        for (d, v) in schema.ids().zip(self.values.iter()) {
            if v.index() >= schema.domain_size(d) {
                return Err(Error::UnknownValue {
                    attribute: d,
                    value: *v,
                });
            }
        }
        Ok(())
    }
}

/// Anything that carries one relation per attribute.
pub trait Preferences {
    fn relations(&self) -> &[PreferenceRelation];
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserProfile {
    pub id: UserId,
    pub relations: Vec<PreferenceRelation>,
}

impl UserProfile {
    pub fn new(id: UserId, relations: Vec<PreferenceRelation>) -> Self {
        Self { id, relations }
    }

    /// A user with no preferences on any attribute.
    pub fn indifferent(id: UserId, schema: &AttributeSchema) -> Self {
        let relations = schema
            .ids()
            .map(|d| PreferenceRelation::empty(d, schema.domain_size(d)))
            .collect();
        Self { id, relations }
    }

    pub fn check(&self, schema: &AttributeSchema) -> Result<()> {
        check_relations(&self.relations, schema)
    }
}

impl Preferences for UserProfile {
    fn relations(&self) -> &[PreferenceRelation] {
        &self.relations
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProfileKind {
    ExactCommon,
    Approximate,
}

/// A virtual user standing in for a set of members.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClusterProfile {
    pub id: ClusterId,
    /// Ascending user ids.
    pub members: Vec<UserId>,
    pub relations: Vec<PreferenceRelation>,
    pub kind: ProfileKind,
}

impl ClusterProfile {
    /// Exact common relations: the per-attribute intersection of the members.
    pub fn common(id: ClusterId, members: &[&UserProfile]) -> Result<Self> {
        let first = members
            .first()
            .ok_or_else(|| Error::Config(format!("cluster {id} has no members")))?;
        let relations = (0..first.relations.len())
            .map(|d| {
                let rs: Vec<&PreferenceRelation> = members.iter().map(|u| &u.relations[d]).collect();
                crate::relation::intersect_relations(&rs)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut ids: Vec<UserId> = members.iter().map(|u| u.id).collect();
        ids.sort();
        Ok(Self {
            id,
            members: ids,
            relations,
            kind: ProfileKind::ExactCommon,
        })
    }
}

impl Preferences for ClusterProfile {
    fn relations(&self) -> &[PreferenceRelation] {
        &self.relations
    }
}

impl Preferences for [PreferenceRelation] {
    fn relations(&self) -> &[PreferenceRelation] {
        self
    }
}

impl Preferences for Vec<PreferenceRelation> {
    fn relations(&self) -> &[PreferenceRelation] {
        self
    }
}

pub(crate) fn check_relations(relations: &[PreferenceRelation], schema: &AttributeSchema) -> Result<()> {
    if relations.len() != schema.len() {
        return Err(Error::SchemaMismatch {
            expected: schema.len(),
            found: relations.len(),
        });
    }
    for (d, r) in schema.ids().zip(relations) {
        if r.attribute() != d {
            return Err(Error::AttributeMismatch {
                left: d,
                right: r.attribute(),
            });
        }
        if r.domain_size() != schema.domain_size(d) {
            return Err(Error::Mismatch(format!(
                "relation on attribute {d} has domain {}, schema has {}",
                r.domain_size(),
                schema.domain_size(d)
            )));
        }
    }
    Ok(())
}
