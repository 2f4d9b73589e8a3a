use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::ids::{AttributeId, ValueId};

/// Half-open numeric range `[lo, hi)` mapped onto one domain value.
#[derive(Clone, Debug, PartialEq)]
pub struct Bin {
    pub lo: f64,
    pub hi: f64,
}

impl Bin {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x < self.hi
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Binning {
    pub lo: f64,
    pub hi: f64,
    /// One bin per domain value, in domain order.
    pub bins: Vec<Bin>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Attribute {
    pub name: String,
    pub values: Vec<String>,
    pub binning: Option<Binning>,
}

impl Attribute {
    pub fn categorical(name: impl Into<String>, values: &[&str]) -> Self {
        Self {
            name: name.into(),
            values: values.iter().map(|v| v.to_string()).collect(),
            binning: None,
        }
    }

    pub fn numeric(name: impl Into<String>, lo: f64, hi: f64, bins: &[(&str, f64, f64)]) -> Self {
        Self {
            name: name.into(),
            values: bins.iter().map(|b| b.0.to_string()).collect(),
            binning: Some(Binning {
                lo,
                hi,
                bins: bins.iter().map(|&(_, lo, hi)| Bin { lo, hi }).collect(),
            }),
        }
    }

    pub fn domain_size(&self) -> usize {
        self.values.len()
    }
}

/// Ordered attributes and their value domains. Ids follow declaration order.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributeSchema {
    attributes: Vec<Attribute>,
}

impl AttributeSchema {
    pub fn new(attributes: Vec<Attribute>) -> Result<Self> {
        let mut names = HashSet::new();
        for a in &attributes {
            if !names.insert(a.name.as_str()) {
                return Err(Error::InvalidSchema(format!("duplicate attribute `{}`", a.name)));
            }
            if a.values.is_empty() {
                return Err(Error::InvalidSchema(format!(
                    "attribute `{}` has an empty domain",
                    a.name
                )));
            }
            let mut seen = HashSet::new();
            for v in &a.values {
                if !seen.insert(v.as_str()) {
                    return Err(Error::InvalidSchema(format!(
                        "duplicate value `{v}` in attribute `{}`",
                        a.name
                    )));
                }
            }
            if let Some(b) = &a.binning {
                check_binning(&a.name, b, a.values.len())?;
            }
        }
        Ok(Self { attributes })
    }

    /// Categorical schema with generated value names `v0, v1, ...`.
    pub fn uniform(attributes: usize, domain: usize) -> Self {
        let attrs = (0..attributes)
            .map(|d| Attribute {
                name: format!("a{d}"),
                values: (0..domain).map(|v| format!("v{v}")).collect(),
                binning: None,
            })
            .collect();
        Self { attributes: attrs }
    }

    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    pub fn attribute(&self, id: AttributeId) -> &Attribute {
        &self.attributes[id.index()]
    }

    pub fn ids(&self) -> impl Iterator<Item = AttributeId> {
        (0..self.attributes.len() as u32).map(AttributeId)
    }

    pub fn domain_size(&self, id: AttributeId) -> usize {
        self.attributes[id.index()].values.len()
    }

    pub fn attribute_id(&self, name: &str) -> Option<AttributeId> {
        self.attributes
            .iter()
            .position(|a| a.name == name)
            .map(|i| AttributeId(i as u32))
    }

    pub fn value_id(&self, attribute: AttributeId, name: &str) -> Option<ValueId> {
        self.attributes[attribute.index()]
            .values
            .iter()
            .position(|v| v == name)
            .map(|i| ValueId(i as u32))
    }

    pub fn value_name(&self, attribute: AttributeId, value: ValueId) -> &str {
        &self.attributes[attribute.index()].values[value.index()]
    }

    /// Bin a raw number. `None` for categorical attributes or out-of-range input.
    pub fn discretize(&self, attribute: AttributeId, x: f64) -> Option<ValueId> {
        let b = self.attributes[attribute.index()].binning.as_ref()?;
        b.bins.iter().position(|bin| bin.contains(x)).map(|i| ValueId(i as u32))
    }

    /// Resolve a field: a value name, or for numeric attributes a raw number.
    pub fn resolve(&self, attribute: AttributeId, field: &str) -> Option<ValueId> {
        self.value_id(attribute, field).or_else(|| {
            let x: f64 = field.parse().ok()?;
            self.discretize(attribute, x)
        })
    }
}

// Negated comparisons so NaN bounds are rejected too.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
fn check_binning(name: &str, b: &Binning, values: usize) -> Result<()> {
    let bad = |msg: &str| Err(Error::InvalidSchema(format!("attribute `{name}`: {msg}")));
    if b.bins.len() != values {
        return bad("every value of a numeric attribute needs exactly one bin");
    }
    if !(b.lo < b.hi) {
        return bad("empty numeric range");
    }
    let mut bins: Vec<&Bin> = b.bins.iter().collect();
    bins.sort_by(|x, y| x.lo.total_cmp(&y.lo));
    if bins.iter().any(|x| !(x.lo < x.hi)) {
        return bad("empty bin");
    }
    if bins[0].lo != b.lo || bins[bins.len() - 1].hi != b.hi {
        return bad("bins do not cover the declared range");
    }
    for w in bins.windows(2) {
        if w[0].hi != w[1].lo {
            return bad("bins overlap or leave a gap");
        }
    }
    Ok(())
}
