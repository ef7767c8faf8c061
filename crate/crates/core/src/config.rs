use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};

/// Rule choosing the axis along which the next split of a cell happens.
/// Every policy skips axes whose bits are exhausted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum AxisPolicy {
    /// Cycle through the axes: split the live axis with the fewest splits so far.
    #[default]
    RoundRobin,
    /// Split the axis with the most remaining bits, lowest index on ties.
    LongestAxisFirst,
    /// Exhaust axis 0 completely, then axis 1, and so on.
    AxisMajor,
}

impl AxisPolicy {
    pub fn id(self) -> u8 {
        match self {
            AxisPolicy::RoundRobin => 0,
            AxisPolicy::LongestAxisFirst => 1,
            AxisPolicy::AxisMajor => 2,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(AxisPolicy::RoundRobin),
            1 => Ok(AxisPolicy::LongestAxisFirst),
            2 => Ok(AxisPolicy::AxisMajor),
            _ => Err(Error::Format(format!("unknown axis policy id {id}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Traversal {
    /// FIFO active list; children appended at the back.
    #[default]
    BreadthFirst,
    /// LIFO active list; each point is localized before the next is touched.
    DepthFirst,
}

/// How intermediate points are generated inside a cell of known count.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum RepresentativePolicy {
    /// Every point at the cell center (rounded towards the lower corner).
    #[default]
    Center,
    /// Seeded uniform samples inside the cell.
    UniformRandom,
    /// A regular lattice filling the cell.
    RegularGrid,
}

impl RepresentativePolicy {
    pub fn id(self) -> u8 {
        match self {
            RepresentativePolicy::Center => 0,
            RepresentativePolicy::UniformRandom => 1,
            RepresentativePolicy::RegularGrid => 2,
        }
    }

    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(RepresentativePolicy::Center),
            1 => Ok(RepresentativePolicy::UniformRandom),
            2 => Ok(RepresentativePolicy::RegularGrid),
            _ => Err(invalid(format!("unknown representative policy id {id}"))),
        }
    }
}

/// Codec options. All of them are recorded in the container header.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct CodecConfig {
    pub axis_policy: AxisPolicy,
    pub traversal: Traversal,
    pub prediction: bool,
    pub representative: RepresentativePolicy,
}

impl CodecConfig {
    pub fn with_prediction(mut self, on: bool) -> Self {
        self.prediction = on;
        self
    }

    pub fn with_traversal(mut self, traversal: Traversal) -> Self {
        self.traversal = traversal;
        self
    }

    pub fn with_axis_policy(mut self, policy: AxisPolicy) -> Self {
        self.axis_policy = policy;
        self
    }
}

macro_rules! named_enum {
    ($ty:ty, $($name:literal => $variant:expr),+ $(,)?) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($name => Ok($variant),)+
                    _ => Err(invalid(format!(concat!("unknown ", stringify!($ty), " '{}'"), s))),
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let name = match *self { $(v if v == $variant => $name,)+ _ => unreachable!() };
                f.write_str(name)
            }
        }
    };
}

named_enum!(AxisPolicy,
    "round-robin" => AxisPolicy::RoundRobin,
    "longest-axis" => AxisPolicy::LongestAxisFirst,
    "axis-major" => AxisPolicy::AxisMajor,
);

named_enum!(Traversal,
    "breadth-first" => Traversal::BreadthFirst,
    "depth-first" => Traversal::DepthFirst,
);

named_enum!(RepresentativePolicy,
    "center" => RepresentativePolicy::Center,
    "uniform" => RepresentativePolicy::UniformRandom,
    "grid" => RepresentativePolicy::RegularGrid,
);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_and_names_round_trip() {
        for p in [AxisPolicy::RoundRobin, AxisPolicy::LongestAxisFirst, AxisPolicy::AxisMajor] {
            assert_eq!(AxisPolicy::from_id(p.id()).unwrap(), p);
            assert_eq!(p.to_string().parse::<AxisPolicy>().unwrap(), p);
        }
        for p in [
            RepresentativePolicy::Center,
            RepresentativePolicy::UniformRandom,
            RepresentativePolicy::RegularGrid,
        ] {
            assert_eq!(RepresentativePolicy::from_id(p.id()).unwrap(), p);
            assert_eq!(p.to_string().parse::<RepresentativePolicy>().unwrap(), p);
        }
        assert!(AxisPolicy::from_id(9).is_err());
        assert!(RepresentativePolicy::from_id(3).is_err());
        assert!("diagonal".parse::<Traversal>().is_err());
    }
}
