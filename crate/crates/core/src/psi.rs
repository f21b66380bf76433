//! Power-log approximating functions.
//!
//! Each component is `ψ(z) = C·log(e + z)^j · z^(−s)` on its decreasing
//! range and constant below it. The constant plateau starts at
//! `max(1, z_peak)`, where `z_peak` is the last point at which the raw
//! formula still increases; for `j = 0` or the usual `log²(e+z)/z` shape this
//! is simply `[0, 1)`.

use std::f64::consts::E;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parse;

/// One component `C·log(e + z)^j / z^s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLog {
    pub coefficient: f64,
    pub power: f64,
    pub log_exponent: u32,
}

impl PowerLog {
    pub fn new(coefficient: f64, power: f64, log_exponent: u32) -> Result<Self> {
        if !(coefficient.is_finite() && coefficient > 0.0) {
            return Err(Error::invalid("C", "coefficient must be positive and finite"));
        }
        if !(power.is_finite() && power >= 0.0) {
            return Err(Error::invalid("s", "power must be nonnegative and finite"));
        }
        Ok(PowerLog {
            coefficient,
            power,
            log_exponent,
        })
    }

    /// The unmodified formula, meaningful for `z > 0`.
    pub fn raw(&self, z: f64) -> f64 {
        let mut v = self.coefficient;
        if self.log_exponent > 0 {
            v *= (E + z).ln().powi(self.log_exponent as i32);
        }
        if self.power != 0.0 {
            v *= z.powf(-self.power);
        }
        v
    }

    /// True when the component is nonincreasing after the plateau extension.
    pub fn is_nonincreasing(&self) -> bool {
        self.power > 0.0 || self.log_exponent == 0
    }

    /// Start of the decreasing range (the plateau covers `[0, plateau_end)`).
    /// Components with `s = 0` and `j > 0` never decrease; they keep the raw
    /// formula above 1.
    ///
    /// `d/dz log ψ = j/((e+z)·log(e+z)) − s/z` is positive exactly where
    /// `g(z) = s·(e+z)·log(e+z) − j·z` is negative; `g` is convex with
    /// `g(0) = s·e`, so the negative set is a bounded interval.
    pub fn plateau_end(&self) -> f64 {
        let (s, j) = (self.power, self.log_exponent as f64);
        if j == 0.0 {
            return 1.0;
        }
        if s == 0.0 {
            return 1.0;
        }
        let g = |z: f64| s * (E + z) * (E + z).ln() - j * z;
        let z_min = (j / s - 1.0).exp() - E;
        if z_min <= 0.0 || g(z_min) >= 0.0 {
            return 1.0;
        }
        let (mut lo, mut hi) = (z_min, z_min.max(1.0) * 2.0);
        while g(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi.max(1.0)
    }

    pub fn eval(&self, z: f64) -> f64 {
        let start = self.plateau_end();
        self.raw(z.max(start))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        PowerLog {
            coefficient: self.coefficient * factor,
            ..*self
        }
    }
}

impl fmt::Display for PowerLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "pl:C={},s={},j={}",
            parse::fmt_real(self.coefficient),
            parse::fmt_real(self.power),
            self.log_exponent
        )
    }
}

impl FromStr for PowerLog {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (tag, body) = parse::split_tag(s)?;
        if tag != "pl" {
            return Err(Error::parse(s, "expected `pl:C=..,s=..,j=..`"));
        }
        let kv = parse::key_values(s, body)?;
        parse::reject_unknown(s, &kv, &["C", "s", "j"])?;
        let c = parse::real(s, "C", parse::lookup(s, &kv, "C")?)?;
        let power = parse::real(s, "s", parse::lookup(s, &kv, "s")?)?;
        let j = parse::integer(s, "j", parse::lookup(s, &kv, "j")?)?;
        let j = u32::try_from(j).map_err(|_| Error::parse(s, "`j` too large"))?;
        PowerLog::new(c, power, j).map_err(|e| Error::parse(s, e.to_string()))
    }
}

/// A vector `ψ = (ψ_1, …, ψ_ℓ)` of power-log components.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<PowerLog>", into = "Vec<PowerLog>")]
pub struct ApproxFunction {
    components: Vec<PowerLog>,
    plateau: Vec<f64>,
}

impl ApproxFunction {
    pub fn new(components: Vec<PowerLog>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("psi", "at least one component is required"));
        }
        let plateau = components.iter().map(PowerLog::plateau_end).collect();
        Ok(ApproxFunction { components, plateau })
    }

    /// `φ_s(z) = z^(−s)`.
    pub fn phi(s: f64) -> Result<Self> {
        ApproxFunction::new(vec![PowerLog::new(1.0, s, 0)?])
    }

    pub fn constant(c: f64) -> Result<Self> {
        ApproxFunction::new(vec![PowerLog::new(c, 0.0, 0)?])
    }

    pub fn scalar(component: PowerLog) -> Self {
        ApproxFunction::new(vec![component]).expect("one component")
    }

    pub fn components(&self) -> &[PowerLog] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// The single component, or an error for vector-valued ψ.
    pub fn as_scalar(&self) -> Result<&PowerLog> {
        match self.components.as_slice() {
            [c] => Ok(c),
            _ => Err(Error::Unsupported(format!(
                "a scalar approximating function is required, got {} components",
                self.components.len()
            ))),
        }
    }

    pub fn eval(&self, z: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.eval_into(z, &mut out);
        out
    }

    pub fn eval_into(&self, z: f64, out: &mut [f64]) {
        for ((c, start), o) in self.components.iter().zip(&self.plateau).zip(out.iter_mut()) {
            *o = c.raw(z.max(*start));
        }
    }

    /// Value of a scalar ψ (first component).
    pub fn eval_first(&self, z: f64) -> f64 {
        self.components[0].raw(z.max(self.plateau[0]))
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.components.iter().all(PowerLog::is_nonincreasing)
    }

    /// Multiplies every component by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        ApproxFunction::new(self.components.iter().map(|c| c.scaled(factor)).collect())
    }
}

impl fmt::Display for ApproxFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.components.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for ApproxFunction {
    type Err = Error;

    /// Components are separated by `;`, e.g. `pl:C=1,s=1,j=0;pl:C=2,s=0,j=0`.
    fn from_str(s: &str) -> Result<Self> {
        let comps = s.split(';').map(str::parse).collect::<Result<Vec<PowerLog>>>()?;
        ApproxFunction::new(comps)
    }
}

impl TryFrom<Vec<PowerLog>> for ApproxFunction {
    type Error = Error;
    fn try_from(v: Vec<PowerLog>) -> Result<Self> {
        ApproxFunction::new(v)
    }
}

impl From<ApproxFunction> for Vec<PowerLog> {
    fn from(a: ApproxFunction) -> Self {
        a.components
    }
}

/// `ψ(z_1) ≽ ψ(z_2)` for every ordered pair of the grid.
pub fn is_monotone_on_grid(psi: &ApproxFunction, grid: &[f64]) -> bool {
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    let values: Vec<Vec<f64>> = sorted.iter().map(|&z| psi.eval(z)).collect();
    values.windows(2).all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| a >= b))
}
