use thiserror::Error;

use crate::ids::{AttributeId, ObjectId, ValueId};

#[derive(Debug, Error)]
pub enum Error {
    #[error("preference cycle on attribute {attribute}: closing the edges forces ({x}, {y}) and its reverse")]
    Cycle {
        attribute: AttributeId,
        x: ValueId,
        y: ValueId,
    },
    #[error("value {value} is outside the domain of attribute {attribute}")]
    UnknownValue { attribute: AttributeId, value: ValueId },
    #[error("relations over different attributes ({left} vs {right})")]
    AttributeMismatch { left: AttributeId, right: AttributeId },
    #[error("value {value} of attribute {attribute} is unreachable from every maximal value")]
    UnreachableValue { attribute: AttributeId, value: ValueId },
    #[error("object has {found} attribute values, schema expects {expected}")]
    SchemaMismatch { expected: usize, found: usize },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: field `{field}` has value `{value}` not allowed by the schema")]
    SchemaViolation { line: usize, field: String, value: String },
    #[error("duplicate object id {0}")]
    DuplicateObject(ObjectId),
    #[error("configuration: {0}")]
    Config(String),
    #[error("mismatched inputs: {0}")]
    Mismatch(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
