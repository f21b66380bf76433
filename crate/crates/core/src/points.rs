//! Classes of integer points: all of ℤ^n, nonzero vectors, primitive vectors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PointClass {
    /// ℤ^n ∖ {0}.
    AllNonzero,
    /// Integer vectors whose coordinates have gcd 1.
    Primitive,
    /// All of ℤ^n, used for affine grids.
    AllInteger,
}

impl PointClass {
    pub fn contains(self, v: &[i64]) -> bool {
        match self {
            PointClass::AllInteger => true,
            PointClass::AllNonzero => v.iter().any(|&c| c != 0),
            PointClass::Primitive => is_primitive(v),
        }
    }
}

impl fmt::Display for PointClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointClass::AllNonzero => "nonzero",
            PointClass::Primitive => "primitive",
            PointClass::AllInteger => "all",
        })
    }
}

impl FromStr for PointClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "nonzero" => Ok(PointClass::AllNonzero),
            "primitive" => Ok(PointClass::Primitive),
            "all" => Ok(PointClass::AllInteger),
            _ => Err(Error::parse(s, "expected `nonzero`, `primitive` or `all`")),
        }
    }
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

/// gcd of the absolute values; the zero vector is not primitive.
pub fn is_primitive(v: &[i64]) -> bool {
    let mut g = 0u64;
    for &c in v {
        g = gcd(g, c.unsigned_abs());
        if g == 1 {
            return true;
        }
    }
    g == 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primitive_examples() {
        assert!(!is_primitive(&[2, 4]));
        assert!(is_primitive(&[3, 5]));
        assert!(!is_primitive(&[0, 7]));
        assert!(is_primitive(&[0, -1]));
        assert!(!is_primitive(&[0, 0]));
        assert!(is_primitive(&[6, 10, 15]));
    }

    #[test]
    fn class_inclusions() {
        for x in -6i64..=6 {
            for y in -6i64..=6 {
                let v = [x, y];
                if PointClass::Primitive.contains(&v) {
                    assert!(PointClass::AllNonzero.contains(&v));
                }
                if PointClass::AllNonzero.contains(&v) {
                    assert!(PointClass::AllInteger.contains(&v));
                }
            }
        }
        assert!(!PointClass::AllNonzero.contains(&[0, 0, 0]));
        assert!(PointClass::AllInteger.contains(&[0, 0, 0]));
    }

    #[test]
    fn names_round_trip() {
        for c in [PointClass::AllNonzero, PointClass::Primitive, PointClass::AllInteger] {
            assert_eq!(c.to_string().parse::<PointClass>().unwrap(), c);
        }
        assert!("odd".parse::<PointClass>().is_err());
    }
}
