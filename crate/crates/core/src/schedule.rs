//! Geometric schedules `t_k = t_0 · r^k` for `k = k_0..=k_max`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parse;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRepr", into = "ScheduleRepr")]
pub struct DyadicSchedule {
    t0: f64,
    ratio: f64,
    k0: i32,
    k_max: i32,
}

impl DyadicSchedule {
    pub fn new(t0: f64, ratio: f64, k0: i32, k_max: i32) -> Result<Self> {
        if !(t0.is_finite() && t0 > 0.0) {
            return Err(Error::invalid("t0", "must be positive"));
        }
        if !(ratio.is_finite() && ratio > 1.0) {
            return Err(Error::invalid("r", "ratio must exceed 1"));
        }
        if k_max < k0 {
            return Err(Error::invalid("k1", "end index precedes start index"));
        }
        Ok(DyadicSchedule { t0, ratio, k0, k_max })
    }

    /// `2^k0, …, 2^k_max`.
    pub fn powers_of_two(k0: i32, k_max: i32) -> Result<Self> {
        DyadicSchedule::new(1.0, 2.0, k0, k_max)
    }

    pub fn ratio(&self) -> f64 {
        self.ratio
    }

    pub fn start_index(&self) -> i32 {
        self.k0
    }

    pub fn end_index(&self) -> i32 {
        self.k_max
    }

    pub fn len(&self) -> usize {
        (self.k_max - self.k0 + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn t(&self, k: i32) -> f64 {
        self.t0 * self.ratio.powi(k)
    }

    /// `(k, t_k)` pairs in increasing order.
    pub fn points(&self) -> Vec<(i32, f64)> {
        (self.k0..=self.k_max).map(|k| (k, self.t(k))).collect()
    }

    /// Consecutive ratios are bounded above.
    pub fn is_quasi_geometric(&self) -> bool {
        ratio_bounds(&self.points()).is_some_and(|(_, hi)| hi.is_finite())
    }

    /// Consecutive ratios are bounded away from 1.
    pub fn is_lacunary(&self) -> bool {
        ratio_bounds(&self.points()).is_none_or(|(lo, _)| lo > 1.0)
    }
}

fn ratio_bounds(points: &[(i32, f64)]) -> Option<(f64, f64)> {
    let ratios: Vec<f64> = points.windows(2).map(|w| w[1].1 / w[0].1).collect();
    if ratios.is_empty() {
        return Some((f64::INFINITY, 1.0));
    }
    Some((
        ratios.iter().copied().fold(f64::INFINITY, f64::min),
        ratios.iter().copied().fold(0.0, f64::max),
    ))
}

impl fmt::Display for DyadicSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "geo:t0={},r={},k0={},k1={}",
            parse::fmt_real(self.t0),
            parse::fmt_real(self.ratio),
            self.k0,
            self.k_max
        )
    }
}

impl FromStr for DyadicSchedule {
    type Err = Error;

    /// `geo:t0=1,r=2,k0=4,k1=9`; `t0` defaults to 1 and `r` to 2.
    fn from_str(s: &str) -> Result<Self> {
        let (tag, body) = parse::split_tag(s)?;
        if tag != "geo" {
            return Err(Error::parse(s, "expected `geo:t0=..,r=..,k0=..,k1=..`"));
        }
        let kv = parse::key_values(s, body)?;
        parse::reject_unknown(s, &kv, &["t0", "r", "k0", "k1"])?;
        let get = |key: &str, default: Option<f64>| -> Result<f64> {
            match kv.iter().find(|(k, _)| *k == key) {
                Some((_, v)) => parse::real(s, key, v),
                None => default.ok_or_else(|| Error::parse(s, format!("missing key `{key}`"))),
            }
        };
        let index = |key: &str| -> Result<i32> {
            let v = parse::lookup(s, &kv, key)?;
            v.parse()
                .map_err(|_| Error::parse(s, format!("`{key}` is not an integer: `{v}`")))
        };
        DyadicSchedule::new(get("t0", Some(1.0))?, get("r", Some(2.0))?, index("k0")?, index("k1")?)
            .map_err(|e| Error::parse(s, e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct ScheduleRepr {
    t0: f64,
    ratio: f64,
    k0: i32,
    k_max: i32,
}

impl TryFrom<ScheduleRepr> for DyadicSchedule {
    type Error = Error;
    fn try_from(r: ScheduleRepr) -> Result<Self> {
        DyadicSchedule::new(r.t0, r.ratio, r.k0, r.k_max)
    }
}

impl From<DyadicSchedule> for ScheduleRepr {
    fn from(s: DyadicSchedule) -> Self {
        ScheduleRepr {
            t0: s.t0,
            ratio: s.ratio,
            k0: s.k0,
            k_max: s.k_max,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dyadic_points() {
        let s = DyadicSchedule::powers_of_two(4, 9).unwrap();
        let ts: Vec<f64> = s.points().into_iter().map(|(_, t)| t).collect();
        assert_eq!(ts, vec![16.0, 32.0, 64.0, 128.0, 256.0, 512.0]);
        assert_eq!(s.len(), 6);
    }

    #[test]
    fn schedules_are_increasing_quasi_geometric_and_lacunary() {
        for (t0, r, k0, k1) in [
            (1.0, 2.0, 0, 20),
            (0.5, 1.1, -3, 40),
            (3.0, 10.0, 1, 5),
            (1.0, 2.0, 7, 7),
        ] {
            let s = DyadicSchedule::new(t0, r, k0, k1).unwrap();
            let pts = s.points();
            assert!(pts.windows(2).all(|w| w[1].1 > w[0].1));
            assert!(s.is_quasi_geometric());
            assert!(s.is_lacunary());
        }
    }

    #[test]
    fn invalid_schedules() {
        assert!(DyadicSchedule::new(1.0, 1.0, 0, 3).is_err());
        assert!(DyadicSchedule::new(0.0, 2.0, 0, 3).is_err());
        assert!(DyadicSchedule::new(1.0, 2.0, 5, 3).is_err());
    }

    #[test]
    fn spec_string_round_trip() {
        let s: DyadicSchedule = "geo:k0=4,k1=9".parse().unwrap();
        assert_eq!(s, DyadicSchedule::powers_of_two(4, 9).unwrap());
        assert_eq!(s.to_string().parse::<DyadicSchedule>().unwrap(), s);
        assert!("geo:k0=4".parse::<DyadicSchedule>().is_err());
    }
}
