//! Subhomogeneous target functions `f : ℝ^n → ℝ^ℓ`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::parse;

/// The supported families, plus componentwise vectors of them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum TargetFunction {
    /// `Σ_{j≤p} |x_j|^d − Σ_{j>p} |x_j|^d` on `n = p + q` variables.
    SignedPowerForm {
        p: usize,
        q: usize,
        d: f64,
    },
    /// `x_1 ⋯ x_n`.
    CoordinateProduct {
        n: usize,
    },
    /// `max_i |x_{offset+i}|^{a_i}` on ℝ^n with `ℓ = len(a) < n`.
    ///
    /// `offset` shifts the coordinates the maximum looks at; it is zero for
    /// the plain family and lets a vector of these express systems of linear
    /// forms `|x_i| ≤ ψ_i`.
    MaxPower {
        exponents: Vec<f64>,
        n: usize,
        offset: usize,
    },
    VectorOf(Vec<TargetFunction>),
}

impl TargetFunction {
    pub fn signed_power(p: usize, q: usize, d: f64) -> Result<Self> {
        let f = TargetFunction::SignedPowerForm { p, q, d };
        f.validate()?;
        Ok(f)
    }

    pub fn product(n: usize) -> Result<Self> {
        let f = TargetFunction::CoordinateProduct { n };
        f.validate()?;
        Ok(f)
    }

    pub fn max_power(exponents: Vec<f64>, n: usize) -> Result<Self> {
        let f = TargetFunction::MaxPower {
            exponents,
            n,
            offset: 0,
        };
        f.validate()?;
        Ok(f)
    }

    /// `(x_1, …, x_ℓ)` as a vector of max-power components, the target of
    /// systems of linear forms.
    pub fn linear_forms(ell: usize, n: usize) -> Result<Self> {
        TargetFunction::vector(
            (0..ell)
                .map(|offset| TargetFunction::MaxPower {
                    exponents: vec![1.0],
                    n,
                    offset,
                })
                .collect(),
        )
    }

    pub fn vector(parts: Vec<TargetFunction>) -> Result<Self> {
        let f = TargetFunction::VectorOf(parts);
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            TargetFunction::SignedPowerForm { p, q, d } => {
                if *p < 1 || *q < 1 {
                    return Err(Error::invalid("p,q", "both signatures must be at least 1"));
                }
                if !(d.is_finite() && *d >= 1.0) {
                    return Err(Error::invalid("d", format!("{d} is below 1")));
                }
            }
            TargetFunction::CoordinateProduct { n } => {
                if *n < 2 {
                    return Err(Error::invalid("n", "the product needs at least 2 variables"));
                }
            }
            TargetFunction::MaxPower { exponents, n, offset } => {
                if exponents.is_empty() {
                    return Err(Error::invalid("a", "at least one exponent is required"));
                }
                if exponents.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
                    return Err(Error::invalid("a", "exponents must be positive"));
                }
                if exponents.len() >= *n {
                    return Err(Error::invalid("n", "the ambient dimension must exceed len(a)"));
                }
                if offset + exponents.len() > *n {
                    return Err(Error::invalid("at", "coordinates run past the ambient dimension"));
                }
            }
            TargetFunction::VectorOf(parts) => {
                if parts.is_empty() {
                    return Err(Error::invalid("f", "a vector needs at least one component"));
                }
                let n = parts[0].dim();
                for part in parts {
                    if matches!(part, TargetFunction::VectorOf(_)) {
                        return Err(Error::invalid("f", "vectors cannot be nested"));
                    }
                    part.validate()?;
                    if part.dim() != n {
                        return Err(Error::invalid("f", "components must share the ambient dimension"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Ambient dimension n.
    pub fn dim(&self) -> usize {
        match self {
            TargetFunction::SignedPowerForm { p, q, .. } => p + q,
            TargetFunction::CoordinateProduct { n } => *n,
            TargetFunction::MaxPower { n, .. } => *n,
            TargetFunction::VectorOf(parts) => parts[0].dim(),
        }
    }

    /// Number of output components ℓ.
    pub fn outputs(&self) -> usize {
        match self {
            TargetFunction::VectorOf(parts) => parts.len(),
            _ => 1,
        }
    }

    /// Scalar components (a scalar target is its own single component).
    pub fn components(&self) -> &[TargetFunction] {
        match self {
            TargetFunction::VectorOf(parts) => parts,
            scalar => std::slice::from_ref(scalar),
        }
    }

    /// Subhomogeneity degree d_f, componentwise.
    pub fn degrees(&self) -> Vec<f64> {
        self.components()
            .iter()
            .map(|c| match c {
                TargetFunction::SignedPowerForm { d, .. } => *d,
                TargetFunction::CoordinateProduct { n } => *n as f64,
                TargetFunction::MaxPower { exponents, .. } => exponents.iter().copied().fold(f64::INFINITY, f64::min),
                TargetFunction::VectorOf(_) => unreachable!("validated: no nesting"),
            })
            .collect()
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let mut out = vec![0.0; self.outputs()];
        self.eval_into(x, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation into a caller-provided buffer of length ℓ.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        for (c, o) in self.components().iter().zip(out.iter_mut()) {
            *o = eval_scalar(c, x);
        }
    }
}

pub(crate) fn eval_scalar(f: &TargetFunction, x: &[f64]) -> f64 {
    match f {
        TargetFunction::SignedPowerForm { p, d, .. } => {
            let (plus, minus) = x.split_at(*p);
            signed_power_sum(plus, *d) - signed_power_sum(minus, *d)
        }
        TargetFunction::CoordinateProduct { .. } => x.iter().product(),
        TargetFunction::MaxPower { exponents, offset, .. } => exponents
            .iter()
            .zip(&x[*offset..])
            .map(|(a, v)| pow_abs(*v, *a))
            .fold(0.0, f64::max),
        TargetFunction::VectorOf(_) => unreachable!("scalar component expected"),
    }
}

fn signed_power_sum(x: &[f64], d: f64) -> f64 {
    x.iter().map(|v| pow_abs(*v, d)).sum()
}

#[inline]
pub(crate) fn pow_abs(v: f64, d: f64) -> f64 {
    let a = v.abs();
    if d == 2.0 {
        a * a
    } else if d == 1.0 {
        a
    } else {
        a.powf(d)
    }
}

impl fmt::Display for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetFunction::SignedPowerForm { p, q, d } => {
                write!(f, "spf:p={p},q={q},d={}", parse::fmt_real(*d))
            }
            TargetFunction::CoordinateProduct { n } => write!(f, "prod:n={n}"),
            TargetFunction::MaxPower { exponents, n, offset } => {
                let a: Vec<String> = exponents.iter().map(|a| parse::fmt_real(*a)).collect();
                write!(f, "maxpow:a={},n={n}", a.join("|"))?;
                if *offset != 0 {
                    write!(f, ",at={offset}")?;
                }
                Ok(())
            }
            TargetFunction::VectorOf(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
        }
    }
}

impl From<TargetFunction> for String {
    fn from(f: TargetFunction) -> String {
        f.to_string()
    }
}

impl TryFrom<String> for TargetFunction {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for TargetFunction {
    type Err = Error;

    /// `spf:p=2,q=1,d=2`, `prod:n=3`, `maxpow:a=2|3,n=4[,at=k]`; several
    /// components joined by `;` form a vector.
    fn from_str(s: &str) -> Result<Self> {
        if s.contains(';') {
            let parts = s.split(';').map(parse_scalar).collect::<Result<Vec<_>>>()?;
            let f = TargetFunction::VectorOf(parts);
            f.validate().map_err(|e| Error::parse(s, e.to_string()))?;
            return Ok(f);
        }
        parse_scalar(s)
    }
}

fn parse_scalar(s: &str) -> Result<TargetFunction> {
    let (tag, body) = parse::split_tag(s)?;
    let kv = parse::key_values(s, body)?;
    let f = match tag {
        "spf" => {
            parse::reject_unknown(s, &kv, &["p", "q", "d"])?;
            TargetFunction::SignedPowerForm {
                p: parse::integer(s, "p", parse::lookup(s, &kv, "p")?)?,
                q: parse::integer(s, "q", parse::lookup(s, &kv, "q")?)?,
                d: parse::real(s, "d", parse::lookup(s, &kv, "d")?)?,
            }
        }
        "prod" => {
            parse::reject_unknown(s, &kv, &["n"])?;
            TargetFunction::CoordinateProduct {
                n: parse::integer(s, "n", parse::lookup(s, &kv, "n")?)?,
            }
        }
        "maxpow" => {
            parse::reject_unknown(s, &kv, &["a", "n", "at"])?;
            let exponents = parse::lookup(s, &kv, "a")?
                .split('|')
                .map(|a| parse::real(s, "a", a.trim()))
                .collect::<Result<Vec<_>>>()?;
            let offset = match kv.iter().find(|(k, _)| *k == "at") {
                Some((_, v)) => parse::integer(s, "at", v)?,
                None => 0,
            };
            TargetFunction::MaxPower {
                exponents,
                n: parse::integer(s, "n", parse::lookup(s, &kv, "n")?)?,
                offset,
            }
        }
        _ => return Err(Error::parse(s, "expected `spf:`, `prod:` or `maxpow:`")),
    };
    f.validate().map_err(|e| Error::parse(s, e.to_string()))?;
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_values() {
        let spf = TargetFunction::signed_power(1, 1, 2.0).unwrap();
        assert_eq!(spf.eval(&[3.0, 4.0]).unwrap(), vec![-7.0]);
        let prod = TargetFunction::product(3).unwrap();
        assert_eq!(prod.eval(&[1.0, 2.0, 3.0]).unwrap(), vec![6.0]);
        let mp = TargetFunction::max_power(vec![2.0], 3).unwrap();
        assert_eq!(mp.eval(&[5.0, 7.0, 11.0]).unwrap(), vec![25.0]);
    }

    #[test]
    fn vector_concatenates() {
        let f: TargetFunction = "spf:p=2,q=1,d=2;maxpow:a=1,n=3,at=2".parse().unwrap();
        assert_eq!(f.outputs(), 2);
        assert_eq!(f.eval(&[1.0, 2.0, -3.0]).unwrap(), vec![-4.0, 3.0]);
        assert_eq!(f.degrees(), vec![2.0, 1.0]);
    }

    #[test]
    fn degrees_per_family() {
        assert_eq!(TargetFunction::signed_power(2, 1, 2.5).unwrap().degrees(), vec![2.5]);
        assert_eq!(TargetFunction::product(4).unwrap().degrees(), vec![4.0]);
        assert_eq!(
            TargetFunction::max_power(vec![1.0, 3.0], 4).unwrap().degrees(),
            vec![1.0]
        );
    }

    #[test]
    fn dimension_mismatch() {
        let f = TargetFunction::product(3).unwrap();
        assert!(matches!(f.eval(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn spec_strings() {
        for s in [
            "spf:p=2,q=1,d=2",
            "prod:n=3",
            "maxpow:a=2|3,n=4",
            "maxpow:a=1,n=2,at=1",
            "spf:p=1,q=1,d=1.5;prod:n=2",
        ] {
            let f: TargetFunction = s.parse().unwrap();
            assert_eq!(f.to_string(), s);
        }
        for bad in [
            "spf:p=2,q=1,d=0.5",
            "spf:p=0,q=1,d=2",
            "prod:n=1",
            "maxpow:a=2,n=1",
            "maxpow:a=0,n=3",
            "maxpow:a=1|1,n=3,at=2",
            "spf:p=1,q=1,d=2;prod:n=3",
            "quad:n=3",
        ] {
            assert!(bad.parse::<TargetFunction>().is_err(), "{bad}");
        }
    }

    #[test]
    fn serde_uses_the_spec_string() {
        let f: TargetFunction = "maxpow:a=1,n=3,at=0;maxpow:a=1,n=3,at=1".parse().unwrap();
        let json = serde_json::to_string(&f).unwrap();
        assert_eq!(json, "\"maxpow:a=1,n=3;maxpow:a=1,n=3,at=1\"");
        assert_eq!(serde_json::from_str::<TargetFunction>(&json).unwrap(), f);
        assert!(serde_json::from_str::<TargetFunction>("\"prod:n=1\"").is_err());
    }
}
