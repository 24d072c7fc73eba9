use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label of a protected group. Labels are ordered integers; pairs of groups
/// are always visited in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Group(pub i64);

impl Group {
    pub fn value(self) -> f64 {
        self.0 as f64
    }

    /// Converts a sampled sensitive value, which must be integral.
    pub fn from_value(v: f64) -> Result<Group> {
        if v.is_finite() && v.fract() == 0.0 {
            Ok(Group(v as i64))
        } else {
            Err(Error::ParseFailure(format!("sensitive value {v} is not an integer group label")))
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Group {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.trim()
            .parse::<i64>()
            .map(Group)
            .map_err(|_| Error::ParseFailure(format!("bad group label `{s}`")))
    }
}
