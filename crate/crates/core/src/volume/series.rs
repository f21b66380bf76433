//! Exact convergence classification for power-log ψ.

use serde::{Deserialize, Serialize};

use super::{integrate_shell, shell_family, ShellFamily};
use crate::error::{check_dim, Error, Result};
use crate::norm::Norm;
use crate::psi::ApproxFunction;
use crate::schedule::DyadicSchedule;
use crate::target::TargetFunction;

const TIE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convergence {
    Converges,
    Diverges,
}

impl Convergence {
    fn from_bool(converges: bool) -> Self {
        if converges {
            Convergence::Converges
        } else {
            Convergence::Diverges
        }
    }
}

/// Which criterion to classify.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Criterion {
    /// The volume integral `∫_1^∞ (shell density) dz`; divergence means
    /// almost every `f∘g` is approximable.
    Asymptotic,
    /// The dyadic series `Σ m(B_k)^{1−r}`; convergence means almost every
    /// `f∘g` is uniformly approximable.
    Uniform { r: f64 },
}

/// Leading growth of a criterion: `z^{−P} log^J z` for integrals, or
/// `2^{αk} k^β` for dyadic series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthExponents {
    pub power: f64,
    pub log_power: f64,
}

/// `∫^∞ z^{−P} log^J z dz < ∞` iff `P > 1`, or `P = 1` and `J < −1`.
pub fn integral_converges(p: f64, j: f64) -> bool {
    if (p - 1.0).abs() <= TIE {
        j < -1.0 - TIE
    } else {
        p > 1.0
    }
}

/// `Σ_k 2^{αk} k^β < ∞` iff `α < 0`, or `α = 0` and `β < −1`.
pub fn dyadic_series_converges(alpha: f64, beta: f64) -> bool {
    if alpha.abs() <= TIE {
        beta < -1.0 - TIE
    } else {
        alpha < 0.0
    }
}

/// Effective `(s, j)` of `Π ψ_k^{1/a_i}` over the constraints.
fn box_exponents(constraints: &[(f64, usize)], psi: &ApproxFunction) -> (f64, f64) {
    constraints.iter().fold((0.0, 0.0), |(s, j), (a, k)| {
        let c = psi.components()[*k];
        (s + c.power / a, j + c.log_exponent as f64 / a)
    })
}

/// Growth exponents of the criterion for `(f, ψ)`: `(P, J)` for
/// [`Criterion::Asymptotic`] and `(α, β)` for [`Criterion::Uniform`].
pub fn series_exponents(criterion: Criterion, f: &TargetFunction, psi: &ApproxFunction) -> Result<GrowthExponents> {
    check_dim(f.outputs(), psi.len())?;
    let norm = match f {
        TargetFunction::SignedPowerForm { p, q, d } => Norm::split(*p, *q, *d)?,
        _ => Norm::max(f.dim()),
    };
    let family =
        shell_family(f, &norm).ok_or_else(|| Error::Unsupported("no classification for this target".into()))?;
    let first = psi.components()[0];
    let (s, j) = (first.power, first.log_exponent as f64);
    let (power, log_power) = match (criterion, family) {
        (Criterion::Asymptotic, ShellFamily::SignedPower { p, q, d }) => (s - (p + q) as f64 + d + 1.0, j),
        (Criterion::Asymptotic, ShellFamily::Product { n }) => (s + 1.0, j + n as f64 - 2.0),
        (Criterion::Asymptotic, ShellFamily::CoordinateBox { n, constraints }) => {
            let (s, j) = box_exponents(&constraints, psi);
            (s - n as f64 + constraints.len() as f64 + 1.0, j)
        }
        (Criterion::Uniform { r }, family) => {
            if !(r.is_finite() && r > 1.0) {
                return Err(Error::invalid("r", "must exceed 1"));
            }
            let e = 1.0 - r;
            match family {
                ShellFamily::SignedPower { p, q, d } => {
                    let n = (p + q) as f64;
                    if (d - n).abs() <= TIE {
                        (-s * e, (1.0 + j) * e)
                    } else {
                        ((n - d - s) * e, j * e)
                    }
                }
                ShellFamily::Product { n } if n == 2 => (-s * e, (1.0 + j) * e),
                ShellFamily::Product { n } => (-s * e, (j + n as f64 - 1.0) * e),
                ShellFamily::CoordinateBox { n, constraints } => {
                    let (s, j) = box_exponents(&constraints, psi);
                    ((n as f64 - constraints.len() as f64 - s) * e, j * e)
                }
            }
        }
    };
    Ok(GrowthExponents { power, log_power })
}

/// Analytic classification of the criterion for power-log ψ.
pub fn classify_series(criterion: Criterion, f: &TargetFunction, psi: &ApproxFunction) -> Result<Convergence> {
    let g = series_exponents(criterion, f, psi)?;
    Ok(Convergence::from_bool(match criterion {
        Criterion::Asymptotic => integral_converges(g.power, g.log_power),
        Criterion::Uniform { .. } => dyadic_series_converges(g.power, g.log_power),
    }))
}

/// Running sums of `(k, term)` pairs.
pub fn accumulate(terms: impl IntoIterator<Item = (i32, f64)>) -> Vec<(i32, f64)> {
    let mut total = 0.0;
    terms
        .into_iter()
        .map(|(k, t)| {
            total += t;
            (k, total)
        })
        .collect()
}

/// Term-by-term partial sums of the criterion along `schedule`, using the
/// actual ψ (no asymptotic simplification). Asymptotic terms are the
/// integrals of the shell density over `(t_{k−1}, t_k]`; uniform terms are
/// the series terms with `2^k` replaced by `t_k`.
pub fn partial_sums(
    criterion: Criterion,
    f: &TargetFunction,
    psi: &ApproxFunction,
    schedule: &DyadicSchedule,
) -> Result<Vec<(i32, f64)>> {
    series_exponents(criterion, f, psi)?;
    let norm = match f {
        TargetFunction::SignedPowerForm { p, q, d } => Norm::split(*p, *q, *d)?,
        _ => Norm::max(f.dim()),
    };
    let family = shell_family(f, &norm).expect("checked by series_exponents");
    let density = |z: f64| -> f64 {
        let values = psi.eval(z);
        match &family {
            ShellFamily::SignedPower { p, q, d } => values[0] * z.powf((p + q) as f64 - d - 1.0),
            ShellFamily::Product { n } => {
                values[0] / z * (z.powi(*n as i32) / values[0]).ln().max(0.0).powi(*n as i32 - 2)
            }
            ShellFamily::CoordinateBox { n, constraints } => {
                let prod: f64 = constraints.iter().map(|(a, k)| values[*k].powf(1.0 / a)).product();
                prod * z.powi((*n - constraints.len()) as i32 - 1)
            }
        }
    };
    let mut terms = Vec::with_capacity(schedule.len());
    for (k, t) in schedule.points() {
        let term = match criterion {
            Criterion::Asymptotic => {
                let lo = (t / schedule.ratio()).max(f64::MIN_POSITIVE);
                integrate_shell(density, lo, t)?.value
            }
            Criterion::Uniform { r } => {
                let values = psi.eval(t);
                let kf = k as f64;
                let base = match &family {
                    ShellFamily::SignedPower { p, q, d } => {
                        let n = (p + q) as f64;
                        if (d - n).abs() <= TIE {
                            kf * values[0]
                        } else {
                            t.powf(n - d) * values[0]
                        }
                    }
                    ShellFamily::Product { n } if *n == 2 => kf * values[0],
                    ShellFamily::Product { n } => {
                        values[0] * (t * values[0].powf(-1.0 / *n as f64)).ln().powi(*n as i32 - 1)
                    }
                    ShellFamily::CoordinateBox { n, constraints } => {
                        let prod: f64 = constraints.iter().map(|(a, k)| values[*k].powf(1.0 / a)).product();
                        t.powi((*n - constraints.len()) as i32) * prod
                    }
                };
                base.powf(1.0 - r)
            }
        };
        terms.push((k, term));
    }
    Ok(accumulate(terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::psi::PowerLog;

    fn spf(p: usize, q: usize, d: f64) -> TargetFunction {
        TargetFunction::signed_power(p, q, d).unwrap()
    }

    #[test]
    fn integral_and_series_tests() {
        assert!(!integral_converges(1.0, 0.0));
        assert!(!integral_converges(1.0, -1.0));
        assert!(integral_converges(1.0, -2.0));
        assert!(integral_converges(1.5, 10.0));
        assert!(!integral_converges(0.5, -10.0));
        assert!(!dyadic_series_converges(0.0, -1.0));
        assert!(dyadic_series_converges(0.0, -2.0));
        assert!(dyadic_series_converges(-0.1, 5.0));
    }

    #[test]
    fn critical_exponent_examples() {
        let f = spf(2, 1, 2.0);
        let c = |psi: &str| classify_series(Criterion::Asymptotic, &f, &psi.parse().unwrap()).unwrap();
        assert_eq!(c("pl:C=1,s=1,j=0"), Convergence::Diverges);
        assert_eq!(c("pl:C=1,s=1.5,j=0"), Convergence::Converges);
        let log_corrected: ApproxFunction = "pl:C=1,s=1,j=2".parse().unwrap();
        assert_eq!(
            classify_series(Criterion::Uniform { r: 2.0 }, &f, &log_corrected).unwrap(),
            Convergence::Converges
        );
    }

    #[test]
    fn signed_power_rule_over_a_grid() {
        for (n, d) in [(3usize, 2.0), (4, 2.0), (4, 3.0), (2, 1.5)] {
            for s in [0.0, 0.5, 1.0, 1.5, 2.0] {
                for j in 0..3u32 {
                    let psi = ApproxFunction::scalar(PowerLog::new(1.0, s, j).unwrap());
                    let got = classify_series(Criterion::Asymptotic, &spf(1, n - 1, d), &psi).unwrap();
                    let nd = n as f64 - d;
                    let diverges = s <= nd;
                    assert_eq!(got == Convergence::Diverges, diverges, "n={n} d={d} s={s} j={j}");
                }
            }
        }
    }

    #[test]
    fn other_families() {
        let prod = TargetFunction::product(3).unwrap();
        let phi = |s: f64| ApproxFunction::phi(s).unwrap();
        assert_eq!(
            classify_series(Criterion::Asymptotic, &prod, &phi(0.0)).unwrap(),
            Convergence::Diverges
        );
        assert_eq!(
            classify_series(Criterion::Asymptotic, &prod, &phi(0.1)).unwrap(),
            Convergence::Converges
        );
        let mp = TargetFunction::max_power(vec![2.0], 3).unwrap();
        // ψ^{1/2} z: critical at s = 4.
        assert_eq!(
            classify_series(Criterion::Asymptotic, &mp, &phi(4.0)).unwrap(),
            Convergence::Diverges
        );
        assert_eq!(
            classify_series(Criterion::Asymptotic, &mp, &phi(4.2)).unwrap(),
            Convergence::Converges
        );
        let kg = TargetFunction::vector(vec![TargetFunction::MaxPower {
            exponents: vec![1.0],
            n: 2,
            offset: 0,
        }])
        .unwrap();
        assert_eq!(
            classify_series(Criterion::Asymptotic, &kg, &phi(1.0)).unwrap(),
            Convergence::Diverges
        );
        assert_eq!(
            classify_series(Criterion::Asymptotic, &kg, &phi(1.1)).unwrap(),
            Convergence::Converges
        );
    }

    #[test]
    fn uniform_for_products() {
        let two = TargetFunction::product(2).unwrap();
        let three = TargetFunction::product(3).unwrap();
        let c = ApproxFunction::constant(1.0).unwrap();
        let u = Criterion::Uniform { r: 2.0 };
        assert_eq!(classify_series(u, &two, &c).unwrap(), Convergence::Diverges);
        assert_eq!(classify_series(u, &three, &c).unwrap(), Convergence::Converges);
        assert!(classify_series(Criterion::Uniform { r: 1.0 }, &two, &c).is_err());
    }

    #[test]
    fn unsupported_shapes() {
        let mixed = TargetFunction::vector(vec![
            TargetFunction::product(2).unwrap(),
            TargetFunction::product(2).unwrap(),
        ])
        .unwrap();
        let psi: ApproxFunction = "pl:C=1,s=1,j=0;pl:C=1,s=1,j=0".parse().unwrap();
        assert!(matches!(
            classify_series(Criterion::Asymptotic, &mixed, &psi),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn accumulation() {
        let ones = accumulate((1..=10).map(|k| (k, 1.0)));
        assert_eq!(ones.last(), Some(&(10, 10.0)));
        let basel = accumulate((1..=100_000).map(|k| (k, 1.0 / (k as f64 * k as f64))));
        let last = basel.last().unwrap().1;
        assert!((last - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-4);
    }

    #[test]
    fn partial_sums_are_nondecreasing() {
        let sched = DyadicSchedule::powers_of_two(1, 20).unwrap();
        let psi: ApproxFunction = "pl:C=1,s=1,j=2".parse().unwrap();
        for criterion in [Criterion::Asymptotic, Criterion::Uniform { r: 2.0 }] {
            let sums = partial_sums(criterion, &spf(2, 1, 2.0), &psi, &sched).unwrap();
            assert_eq!(sums.len(), 20);
            assert!(sums.windows(2).all(|w| w[1].1 >= w[0].1));
        }
    }
}
