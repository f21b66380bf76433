//! Block-structured ℓ^d norms.
//!
//! A [`Norm`] splits ℝ^n into consecutive coordinate blocks and takes the
//! maximum of the per-block ℓ^d norms. One block with exponent ∞ is the
//! maximum norm; one block with a finite exponent is plain ℓ^d; two blocks of
//! sizes p and q with a shared exponent d give the norm used for the signed
//! power forms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::parse;

/// Exponent of an ℓ^d block. Infinity is a distinguished value rather than
/// `f64::INFINITY` so that spec strings and records round-trip exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn finite(d: f64) -> Result<Self> {
        if d.is_finite() && d >= 1.0 {
            Ok(Exponent::Finite(d))
        } else {
            Err(Error::invalid("exponent", format!("{d} is not in [1, inf)")))
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    /// The value as an `f64`, with `Infinity` mapped to `f64::INFINITY`.
    pub fn as_f64(self) -> f64 {
        match self {
            Exponent::Finite(d) => d,
            Exponent::Infinity => f64::INFINITY,
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(d) => write!(f, "{}", parse::fmt_real(*d)),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "max" => Ok(Exponent::Infinity),
            other => {
                let d = parse::real(s, "exponent", other)?;
                Exponent::finite(d).map_err(|_| Error::parse(s, "exponent must be >= 1 or `inf`"))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBlock {
    pub dim: usize,
    pub exponent: Exponent,
}

/// A norm on ℝ^n given as the maximum over coordinate blocks of ℓ^d norms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NormRepr", into = "NormRepr")]
pub struct Norm {
    blocks: Vec<NormBlock>,
    dim: usize,
}

impl Norm {
    pub fn from_blocks(blocks: Vec<NormBlock>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::invalid("norm", "at least one block is required"));
        }
        for b in &blocks {
            if b.dim == 0 {
                return Err(Error::invalid("norm", "block dimensions must be positive"));
            }
            if let Exponent::Finite(d) = b.exponent {
                Exponent::finite(d)?;
            }
        }
        let dim = blocks.iter().map(|b| b.dim).sum();
        Ok(Norm { blocks, dim })
    }

    /// Maximum norm on ℝ^n.
    pub fn max(n: usize) -> Self {
        Norm {
            blocks: vec![NormBlock {
                dim: n,
                exponent: Exponent::Infinity,
            }],
            dim: n,
        }
    }

    /// Plain ℓ^d norm on ℝ^n.
    pub fn ld(n: usize, d: f64) -> Result<Self> {
        Norm::from_blocks(vec![NormBlock {
            dim: n,
            exponent: Exponent::finite(d)?,
        }])
    }

    /// `max(‖x‖_d, ‖y‖_d)` on ℝ^p × ℝ^q.
    pub fn split(p: usize, q: usize, d: f64) -> Result<Self> {
        let exponent = Exponent::finite(d)?;
        Norm::from_blocks(vec![NormBlock { dim: p, exponent }, NormBlock { dim: q, exponent }])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[NormBlock] {
        &self.blocks
    }

    pub fn is_max_norm(&self) -> bool {
        self.blocks.iter().all(|b| b.exponent.is_infinite() || b.dim == 1)
    }

    /// Checked evaluation.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len())?;
        Ok(self.value(x))
    }

    /// Evaluation without the length check; callers guarantee `x.len() == dim`.
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut best = 0.0f64;
        let mut offset = 0;
        for b in &self.blocks {
            let slice = &x[offset..offset + b.dim];
            offset += b.dim;
            best = best.max(block_norm(slice, b.exponent));
        }
        best
    }

    /// Smallest `c` with `ν(x) ≤ c·‖x‖_∞`; the reverse inequality
    /// `‖x‖_∞ ≤ ν(x)` always holds for block norms.
    pub fn linf_equivalence(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| match b.exponent {
                Exponent::Infinity => 1.0,
                Exponent::Finite(d) => (b.dim as f64).powf(1.0 / d),
            })
            .fold(1.0, f64::max)
    }
}

pub(crate) fn block_norm(x: &[f64], exponent: Exponent) -> f64 {
    match exponent {
        Exponent::Infinity => x.iter().fold(0.0f64, |m, v| m.max(v.abs())),
        Exponent::Finite(d) if d == 1.0 => x.iter().map(|v| v.abs()).sum(),
        Exponent::Finite(d) if d == 2.0 => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        Exponent::Finite(d) => {
            let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if m == 0.0 {
                return 0.0;
            }
            let s: f64 = x.iter().map(|v| (v.abs() / m).powf(d)).sum();
            m * s.powf(1.0 / d)
        }
    }
}

/// Dimension-free description of a norm, as written on the command line:
/// `max`, `ld:2`, `block:1:2,1:2`.
#[derive(Clone, Debug, PartialEq)]
pub enum NormSpec {
    Max,
    Ld(Exponent),
    Blocks(Vec<NormBlock>),
}

impl NormSpec {
    pub fn resolve(&self, n: usize) -> Result<Norm> {
        let norm = match self {
            NormSpec::Max => Norm::max(n),
            NormSpec::Ld(e) => Norm::from_blocks(vec![NormBlock { dim: n, exponent: *e }])?,
            NormSpec::Blocks(b) => Norm::from_blocks(b.clone())?,
        };
        check_dim(n, norm.dim())?;
        Ok(norm)
    }
}

impl From<&Norm> for NormSpec {
    fn from(norm: &Norm) -> Self {
        match norm.blocks.as_slice() {
            [b] if b.exponent.is_infinite() => NormSpec::Max,
            _ => NormSpec::Blocks(norm.blocks.clone()),
        }
    }
}

impl fmt::Display for NormSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormSpec::Max => write!(f, "max"),
            NormSpec::Ld(e) => write!(f, "ld:{e}"),
            NormSpec::Blocks(blocks) => {
                write!(f, "block:")?;
                for (i, b) in blocks.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{}:{}", b.dim, b.exponent)?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for NormSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (tag, body) = parse::split_tag(s)?;
        match tag {
            "max" if body.is_empty() => Ok(NormSpec::Max),
            "ld" => Ok(NormSpec::Ld(body.parse()?)),
            "block" => {
                let mut blocks = Vec::new();
                for item in body.split(',') {
                    let (dim, exp) = item
                        .split_once(':')
                        .ok_or_else(|| Error::parse(s, format!("expected dim:exponent, found `{item}`")))?;
                    let dim = parse::integer(s, "dim", dim.trim())?;
                    if dim == 0 {
                        return Err(Error::parse(s, "block dimension must be positive"));
                    }
                    blocks.push(NormBlock {
                        dim,
                        exponent: exp.parse()?,
                    });
                }
                Ok(NormSpec::Blocks(blocks))
            }
            _ => Err(Error::parse(s, "expected `max`, `ld:<d>` or `block:<dim>:<d>,...`")),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct NormRepr {
    blocks: Vec<NormBlock>,
}

impl TryFrom<NormRepr> for Norm {
    type Error = Error;
    fn try_from(r: NormRepr) -> Result<Self> {
        Norm::from_blocks(r.blocks)
    }
}

impl From<Norm> for NormRepr {
    fn from(n: Norm) -> Self {
        NormRepr { blocks: n.blocks }
    }
}
