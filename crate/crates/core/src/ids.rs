use std::fmt;

use num_rational::Ratio;

/// Exact arithmetic for similarities, weights and accuracy metrics.
pub type Rational = Ratio<i128>;

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident($inner:ty)) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
        pub struct $name(pub $inner);

        impl $name {
            #[inline]
            pub fn index(self) -> usize {
                self.0 as usize
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(
    /// Position of an attribute in its schema.
    AttributeId(u32)
);
id_type!(
    /// Position of a value in its attribute's domain.
    ValueId(u32)
);
id_type!(ObjectId(u64));
id_type!(UserId(u32));
id_type!(ClusterId(u32));

/// Owner of a frontier or buffer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Holder {
    User(UserId),
    Cluster(ClusterId),
}

impl fmt::Display for Holder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Holder::User(u) => write!(f, "c{u}"),
            Holder::Cluster(c) => write!(f, "U{c}"),
        }
    }
}
