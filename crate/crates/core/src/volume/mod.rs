//! Volumes of the regions `{S ≤ ν(x) ≤ T, |f(x)| ≼ ψ(ν(x))}`, special
//! functions, quadrature, a Monte Carlo oracle and convergence classifiers.

mod ik;
mod mc;
mod quad;
mod series;
mod special;

pub use ik::i_k_closed_form;
pub use mc::{binomial_estimate, monte_carlo_hits, monte_carlo_region_volume};
pub use quad::{adaptive_simpson, gauss_kronrod, integrate_shell, Quadrature, ABS_TOL, MAX_DEPTH, REL_TOL};
pub use series::{
    accumulate, classify_series, dyadic_series_converges, integral_converges, partial_sums, series_exponents,
    Convergence, Criterion, GrowthExponents,
};
pub use special::{gamma_fn, ln_gamma, zeta_fn};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::norm::{Exponent, Norm};
use crate::psi::{ApproxFunction, PowerLog};
use crate::rng::SimRng;
use crate::target::TargetFunction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Quadrature,
    MonteCarlo,
    /// Monte Carlo on an inner core plus quadrature on the outer shell.
    Composite,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeResult {
    pub value: f64,
    pub abs_error: f64,
    pub method: Method,
    /// Monte Carlo standard error.
    pub stderr: Option<f64>,
    /// Monte Carlo sample count.
    pub samples: Option<u64>,
    /// Set when a Monte Carlo run saw no hits.
    pub degenerate: bool,
}

impl VolumeResult {
    fn exact(value: f64, method: Method) -> Self {
        VolumeResult {
            value,
            abs_error: 0.0,
            method,
            stderr: None,
            samples: None,
            degenerate: false,
        }
    }

    fn from_quadrature(q: Quadrature) -> Self {
        VolumeResult {
            value: q.value.max(0.0),
            abs_error: q.abs_error,
            method: Method::Quadrature,
            stderr: None,
            samples: None,
            degenerate: false,
        }
    }
}

/// `(v_k, v'_k)`: the ℓ^d unit-ball volume in ℝ^k and its sphere factor
/// `k·v_k`, the radial density of `R ↦ v_k·R^k` at `R = 1`.
pub fn unit_ball_volume_ld(k: usize, d: Exponent) -> (f64, f64) {
    let kf = k as f64;
    let v = match d {
        Exponent::Infinity => 2f64.powi(k as i32),
        Exponent::Finite(d) => {
            let log_v = kf * (2f64.ln() + special::ln_gamma(1.0 + 1.0 / d).expect("positive"))
                - special::ln_gamma(1.0 + kf / d).expect("positive");
            log_v.exp()
        }
    };
    (v, kf * v)
}

/// Shapes with a closed-form shell volume.
#[derive(Clone, Debug, PartialEq)]
pub enum ShellFamily {
    SignedPower {
        p: usize,
        q: usize,
        d: f64,
    },
    Product {
        n: usize,
    },
    /// `|x_{c_i}|^{a_i} ≤ ψ_{k_i}` for the listed `(a_i, k_i)` under the
    /// maximum norm; covers the max-power family and systems of linear forms.
    CoordinateBox {
        n: usize,
        constraints: Vec<(f64, usize)>,
    },
}

/// The closed-form family matching `(f, ν)`, if any.
pub fn shell_family(f: &TargetFunction, norm: &Norm) -> Option<ShellFamily> {
    if f.dim() != norm.dim() {
        return None;
    }
    match f {
        TargetFunction::SignedPowerForm { p, q, d } => {
            (Norm::split(*p, *q, *d).ok()? == *norm).then_some(ShellFamily::SignedPower { p: *p, q: *q, d: *d })
        }
        TargetFunction::CoordinateProduct { n } => norm.is_max_norm().then_some(ShellFamily::Product { n: *n }),
        TargetFunction::MaxPower { exponents, n, .. } => norm.is_max_norm().then(|| ShellFamily::CoordinateBox {
            n: *n,
            constraints: exponents.iter().map(|a| (*a, 0)).collect(),
        }),
        TargetFunction::VectorOf(parts) => {
            if !norm.is_max_norm() {
                return None;
            }
            let n = f.dim();
            let mut used = vec![false; n];
            let mut constraints = Vec::new();
            for (k, part) in parts.iter().enumerate() {
                let TargetFunction::MaxPower { exponents, offset, .. } = part else {
                    return None;
                };
                for (i, a) in exponents.iter().enumerate() {
                    let c = offset + i;
                    if used[c] {
                        return None;
                    }
                    used[c] = true;
                    constraints.push((*a, k));
                }
            }
            (constraints.len() < n).then_some(ShellFamily::CoordinateBox { n, constraints })
        }
    }
}

const THRESHOLD_CAP: f64 = 1e12;
const BISECTION_STEPS: usize = 200;
const THRESHOLD_MARGIN: f64 = 1.01;

/// Validity threshold `M ≥ 1` above which the closed-form volume applies.
///
/// Finds the point past which the family condition holds (`ψ(z) < z^d`,
/// `ψ(z) < z^n`, or `ψ_k(z)^{1/a_i} < z`) by doubling and bisection, then
/// returns `max(1, 1.01·z*)`.
pub fn threshold_m(f: &TargetFunction, psi: &ApproxFunction) -> Result<f64> {
    check_dim(f.outputs(), psi.len())?;
    let norm_guess = match f {
        TargetFunction::SignedPowerForm { p, q, d } => Norm::split(*p, *q, *d)?,
        _ => Norm::max(f.dim()),
    };
    let family = shell_family(f, &norm_guess)
        .ok_or_else(|| Error::Unsupported("no closed-form family for this target".into()))?;
    let mut values = vec![0.0; psi.len()];
    let holds = |z: f64, values: &mut [f64]| -> bool {
        psi.eval_into(z, values);
        match &family {
            ShellFamily::SignedPower { d, .. } => values[0] < z.powf(*d),
            ShellFamily::Product { n } => values[0] < z.powi(*n as i32),
            ShellFamily::CoordinateBox { constraints, .. } => {
                constraints.iter().all(|(a, k)| values[*k].powf(1.0 / a) < z)
            }
        }
    };
    let (mut lo, mut hi) = if holds(1.0, &mut values) {
        (0.0, 1.0)
    } else {
        let mut hi = 2.0;
        while !holds(hi, &mut values) {
            hi *= 2.0;
            if hi > THRESHOLD_CAP {
                return Err(Error::ThresholdNotFound { cap: THRESHOLD_CAP });
            }
        }
        (hi / 2.0, hi)
    };
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if holds(mid, &mut values) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((THRESHOLD_MARGIN * hi).max(1.0))
}

fn check_shell(f: &TargetFunction, psi: &ApproxFunction, s: f64, t: f64) -> Result<bool> {
    if !(s.is_finite() && t.is_finite() && s <= t) {
        return Err(Error::invalid("S,T", "need finite S ≤ T"));
    }
    let m = threshold_m(f, psi)?;
    if s < m {
        return Err(Error::BelowThreshold { start: s, threshold: m });
    }
    Ok(s == t)
}

/// `1 − (1 − u)^a` without cancellation for small `u`.
fn one_minus_power(u: f64, a: f64) -> f64 {
    -(a * (-u).ln_1p()).exp_m1()
}

/// `∫_S^T z^{n−1}[v_p v'_q (1 − (1 − ψ/z^d)^{p/d}) + v_q v'_p (1 − (1 − ψ/z^d)^{q/d})] dz`
/// for the signed power form under `max(‖x‖_d, ‖y‖_d)`.
pub fn shell_volume_signed_power(
    p: usize,
    q: usize,
    d: f64,
    psi: &ApproxFunction,
    s: f64,
    t: f64,
) -> Result<VolumeResult> {
    let f = TargetFunction::signed_power(p, q, d)?;
    let c = *psi.as_scalar()?;
    if check_shell(&f, psi, s, t)? {
        return Ok(VolumeResult::exact(0.0, Method::Quadrature));
    }
    let n = (p + q) as i32;
    let e = Exponent::Finite(d);
    let (vp, vp1) = unit_ball_volume_ld(p, e);
    let (vq, vq1) = unit_ball_volume_ld(q, e);
    let (pa, qa) = (p as f64 / d, q as f64 / d);
    let start = c.plateau_end();
    let integrand = |z: f64| {
        let u = c.raw(z.max(start)) / z.powf(d);
        z.powi(n - 1) * (vp * vq1 * one_minus_power(u, pa) + vq * vp1 * one_minus_power(u, qa))
    };
    Ok(VolumeResult::from_quadrature(integrate_shell(integrand, s, t)?))
}

/// `2^n·n·∫_S^T (ψ/z)·Σ_{i=0}^{n−2} log^i(z^n/ψ)/i! dz` for `x_1⋯x_n` under
/// the maximum norm.
pub fn shell_volume_product(n: usize, psi: &ApproxFunction, s: f64, t: f64) -> Result<VolumeResult> {
    let f = TargetFunction::product(n)?;
    let c = *psi.as_scalar()?;
    if check_shell(&f, psi, s, t)? {
        return Ok(VolumeResult::exact(0.0, Method::Quadrature));
    }
    let factor = 2f64.powi(n as i32) * n as f64;
    let start = c.plateau_end();
    let integrand = |z: f64| factor * i_k_closed_form(n as u32 - 2, z, c.raw(z.max(start)));
    Ok(VolumeResult::from_quadrature(integrate_shell(integrand, s, t)?))
}

/// `2^n·(n − ℓ)·∫_S^T ψ(z)^a z^{n−ℓ−1} dz` with `a = Σ 1/a_i`, for
/// `max_i |x_i|^{a_i}` under the maximum norm.
pub fn shell_volume_max_power(
    n: usize,
    exponents: &[f64],
    psi: &ApproxFunction,
    s: f64,
    t: f64,
) -> Result<VolumeResult> {
    let f = TargetFunction::max_power(exponents.to_vec(), n)?;
    psi.as_scalar()?;
    if check_shell(&f, psi, s, t)? {
        return Ok(VolumeResult::exact(0.0, Method::Quadrature));
    }
    let constraints: Vec<(f64, usize)> = exponents.iter().map(|a| (*a, 0)).collect();
    coordinate_box_volume(n, &constraints, psi, s, t)
}

/// `2^n·(n − ℓ)·∫_S^T [Π ψ_i(z)] z^{n−ℓ−1} dz` for the system
/// `|x_i| ≤ ψ_i(ν(x))`, `i ≤ ℓ`, under the maximum norm.
pub fn shell_volume_kg(n: usize, psis: &ApproxFunction, s: f64, t: f64) -> Result<VolumeResult> {
    let parts = (0..psis.len())
        .map(|i| TargetFunction::MaxPower {
            exponents: vec![1.0],
            n,
            offset: i,
        })
        .collect();
    let f = TargetFunction::vector(parts)?;
    if check_shell(&f, psis, s, t)? {
        return Ok(VolumeResult::exact(0.0, Method::Quadrature));
    }
    let constraints: Vec<(f64, usize)> = (0..psis.len()).map(|k| (1.0, k)).collect();
    coordinate_box_volume(n, &constraints, psis, s, t)
}

fn coordinate_box_volume(
    n: usize,
    constraints: &[(f64, usize)],
    psi: &ApproxFunction,
    s: f64,
    t: f64,
) -> Result<VolumeResult> {
    let ell = constraints.len();
    let factor = 2f64.powi(n as i32) * (n - ell) as f64;
    let integrand = |z: f64| {
        let values = psi.eval(z);
        let prod: f64 = constraints.iter().map(|(a, k)| values[*k].powf(1.0 / a)).product();
        factor * prod * z.powi((n - ell - 1) as i32)
    };
    Ok(VolumeResult::from_quadrature(integrate_shell(integrand, s, t)?))
}

/// Shell volume via whichever closed form matches `(f, ν)`.
pub fn shell_volume(f: &TargetFunction, psi: &ApproxFunction, norm: &Norm, s: f64, t: f64) -> Result<VolumeResult> {
    match shell_family(f, norm) {
        Some(ShellFamily::SignedPower { p, q, d }) => shell_volume_signed_power(p, q, d, psi, s, t),
        Some(ShellFamily::Product { n }) => shell_volume_product(n, psi, s, t),
        Some(ShellFamily::CoordinateBox { n, constraints }) => {
            check_dim(f.outputs(), psi.len())?;
            if check_shell(f, psi, s, t)? {
                return Ok(VolumeResult::exact(0.0, Method::Quadrature));
            }
            coordinate_box_volume(n, &constraints, psi, s, t)
        }
        None => Err(Error::Unsupported(
            "no closed-form volume for this target and norm; use the Monte Carlo oracle".into(),
        )),
    }
}

/// `m({x : |f(x)| ≼ ε, ν(x) ≤ T})`: the closed form on `[M, T]` plus Monte
/// Carlo on the core `ν ≤ M`, or pure Monte Carlo when no closed form
/// applies or `T ≤ M`.
pub fn b_set_volume(
    f: &TargetFunction,
    epsilon: &[f64],
    norm: &Norm,
    t: f64,
    samples: u64,
    rng: &mut SimRng,
) -> Result<VolumeResult> {
    check_dim(f.outputs(), epsilon.len())?;
    check_dim(f.dim(), norm.dim())?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::invalid("T", "must be positive"));
    }
    if epsilon.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::invalid("epsilon", "entries must be finite and nonnegative"));
    }
    if epsilon.contains(&0.0) {
        // Zero sets of the supported families are null sets.
        return Ok(VolumeResult::exact(0.0, Method::ClosedForm));
    }
    let psi = ApproxFunction::new(
        epsilon
            .iter()
            .map(|e| PowerLog::new(*e, 0.0, 0))
            .collect::<Result<_>>()?,
    )?;
    let threshold = match shell_family(f, norm) {
        Some(_) => threshold_m(f, &psi).ok(),
        None => None,
    };
    match threshold {
        Some(m) if m < t => {
            let inner = monte_carlo_region_volume(f, &psi, norm, 0.0, m, samples, rng)?;
            let outer = shell_volume(f, &psi, norm, m, t)?;
            let stderr = inner.stderr.unwrap_or(0.0);
            Ok(VolumeResult {
                value: inner.value + outer.value,
                abs_error: (stderr * stderr + outer.abs_error * outer.abs_error).sqrt(),
                method: Method::Composite,
                stderr: Some(stderr),
                samples: Some(samples),
                degenerate: inner.degenerate,
            })
        }
        _ => monte_carlo_region_volume(f, &psi, norm, 0.0, t, samples, rng),
    }
}
