use crate::error::{Error, Result};
use crate::ids::ValueId;
use crate::profile::{ObjectRecord, Preferences};
use crate::relation::PreferenceRelation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Dominance {
    Dominates,
    DominatedBy,
    Identical,
    Incomparable,
}

impl Dominance {
    pub fn flip(self) -> Self {
        match self {
            Dominance::Dominates => Dominance::DominatedBy,
            Dominance::DominatedBy => Dominance::Dominates,
            d => d,
        }
    }
}

/// Compare two value vectors attribute by attribute. Lengths are not checked.
#[inline]
pub fn compare(a: &[ValueId], b: &[ValueId], relations: &[PreferenceRelation]) -> Dominance {
    let mut a_better = false;
    let mut b_better = false;
    for ((&x, &y), r) in a.iter().zip(b).zip(relations) {
        if x == y {
            continue;
        }
        if r.prefers(x, y) {
            if b_better {
                return Dominance::Incomparable;
            }
            a_better = true;
        } else if r.prefers(y, x) {
            if a_better {
                return Dominance::Incomparable;
            }
            b_better = true;
        } else {
            return Dominance::Incomparable;
        }
    }
    match (a_better, b_better) {
        (true, false) => Dominance::Dominates,
        (false, true) => Dominance::DominatedBy,
        (false, false) => Dominance::Identical,
        (true, true) => unreachable!(),
    }
}

/// Checked comparison of `a` against `b` under `profile`.
pub fn dominates<P: Preferences + ?Sized>(a: &ObjectRecord, b: &ObjectRecord, profile: &P) -> Result<Dominance> {
    let rels = profile.relations();
    for o in [a, b] {
        if o.values.len() != rels.len() {
            return Err(Error::SchemaMismatch {
                expected: rels.len(),
                found: o.values.len(),
            });
        }
    }
    Ok(compare(&a.values, &b.values, rels))
}
