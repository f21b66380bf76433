//! Generic Diophantine approximation of subhomogeneous functions.
//!
//! The crate is organized in layers:
//!
//! * domain types: [`norm`], [`psi`], [`target`], [`points`], [`schedule`]
//!   together with the witness checks in [`witness`];
//! * [`haar`]: random unimodular maps and random lattices;
//! * [`volume`]: closed-form shell volumes, special functions, quadrature,
//!   a Monte Carlo volume oracle and convergence classifiers;
//! * [`enumerate`]: exact counting of integer points `v` with
//!   `|f(g·v)| ≼ ψ(ν(v))`, plus a brute-force oracle;
//! * [`experiments`]: statistical harnesses built on the above.

// `!(x >= 0.0)` is used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::redundant_guards, clippy::needless_range_loop)]

pub mod enumerate;
pub mod error;
pub mod experiments;
pub mod haar;
pub mod norm;
pub mod order;
mod parse;
pub mod points;
pub mod psi;
pub mod rng;
pub mod schedule;
pub mod target;
pub mod volume;
pub mod witness;

pub use error::{Error, Result};
pub use norm::{Exponent, Norm, NormBlock, NormSpec};
pub use order::partial_order_leq;
pub use points::{is_primitive, PointClass};
pub use psi::{ApproxFunction, PowerLog};
pub use schedule::DyadicSchedule;
pub use target::TargetFunction;
