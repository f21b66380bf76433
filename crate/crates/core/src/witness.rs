//! Sampled checks of subhomogeneity and regularity, and the B-set predicate.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::norm::Norm;
use crate::order::abs_leq;
use crate::psi::ApproxFunction;
use crate::rng::rng_from_seed;
use crate::target::TargetFunction;

const SLACK: f64 = 1e-12;

/// Largest power any term of the component raises a coordinate to.
fn term_degree(f: &TargetFunction) -> f64 {
    match f {
        TargetFunction::SignedPowerForm { d, .. } => *d,
        TargetFunction::CoordinateProduct { n } => *n as f64,
        TargetFunction::MaxPower { exponents, .. } => exponents.iter().copied().fold(0.0, f64::max),
        TargetFunction::VectorOf(_) => unreachable!("scalar component expected"),
    }
}

/// Checks `|f(t·x)| ≼ t^{d_f}·|f(x)|` on `samples` random pairs with
/// `t ~ U(0,1)` and standard Gaussian `x`, allowing rounding error relative
/// to the size of the individual terms.
pub fn subhomogeneity_witness(f: &TargetFunction, samples: usize, seed: u64) -> bool {
    let mut rng = rng_from_seed(seed);
    let n = f.dim();
    let degrees = f.degrees();
    let term_degrees: Vec<f64> = f.components().iter().map(term_degree).collect();
    let mut x = vec![0.0; n];
    let mut tx = vec![0.0; n];
    let mut fx = vec![0.0; f.outputs()];
    let mut ftx = vec![0.0; f.outputs()];
    for _ in 0..samples {
        let t: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
        for (xi, txi) in x.iter_mut().zip(tx.iter_mut()) {
            *xi = rng.sample(StandardNormal);
            *txi = t * *xi;
        }
        f.eval_into(&x, &mut fx);
        f.eval_into(&tx, &mut ftx);
        let size = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let ok = ftx
            .iter()
            .zip(&fx)
            .zip(degrees.iter().zip(&term_degrees))
            .all(|((a, b), (d, e))| {
                let scale = t.powf(*d);
                let rounding = SLACK * scale * n as f64 * size.powf(*e);
                a.abs() <= scale * b.abs() * (1.0 + SLACK) + rounding + f64::MIN_POSITIVE
            });
        if !ok {
            return false;
        }
    }
    true
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityWitness {
    pub a: f64,
    pub b: f64,
    pub ok: bool,
}

/// Returns `a = 2`, `b = min_i 2^{−s_i}` and whether `b·ψ(z) ≼ ψ(2z)` holds
/// on every grid point.
pub fn regularity_witness(psi: &ApproxFunction, grid: &[f64]) -> RegularityWitness {
    let a: f64 = 2.0;
    let b = psi
        .components()
        .iter()
        .map(|c| a.powf(-c.power))
        .fold(f64::INFINITY, f64::min);
    let ok = !grid.is_empty()
        && grid.iter().all(|&z| {
            let lo = psi.eval(z);
            let hi = psi.eval(a * z);
            lo.iter().zip(&hi).all(|(l, h)| b * l <= h * (1.0 + SLACK))
        });
    RegularityWitness { a, b, ok }
}

/// Membership in `B_{f,ε,ν,T} = {x : |f(x)| ≼ ε, ν(x) ≤ T}`.
pub fn b_set_contains(f: &TargetFunction, eps: &[f64], norm: &Norm, t: f64, x: &[f64]) -> bool {
    if norm.value(x) > t {
        return false;
    }
    let mut fx = vec![0.0; f.outputs()];
    f.eval_into(x, &mut fx);
    abs_leq(&fx, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn z_grid() -> Vec<f64> {
        (0..300).map(|i| 1e-3 * 1.07f64.powi(i)).collect()
    }

    #[test]
    fn homogeneous_families_pass() {
        for seed in [1, 2, 3] {
            assert!(subhomogeneity_witness(
                &TargetFunction::signed_power(2, 1, 2.0).unwrap(),
                10_000,
                seed
            ));
            assert!(subhomogeneity_witness(
                &TargetFunction::product(3).unwrap(),
                10_000,
                seed
            ));
            assert!(subhomogeneity_witness(
                &TargetFunction::max_power(vec![1.0, 3.0], 4).unwrap(),
                10_000,
                seed
            ));
        }
    }

    #[test]
    fn homogeneity_is_an_equality_for_power_forms_and_products() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for f in [
            TargetFunction::signed_power(2, 2, 2.0).unwrap(),
            TargetFunction::signed_power(1, 2, 1.7).unwrap(),
            TargetFunction::product(3).unwrap(),
        ] {
            let d = f.degrees()[0];
            for _ in 0..2_000 {
                let t: f64 = rng.random_range(0.0..1.0);
                let x: Vec<f64> = (0..f.dim()).map(|_| rng.sample(StandardNormal)).collect();
                let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
                let lhs = f.eval(&tx).unwrap()[0].abs();
                let rhs = t.powf(d) * f.eval(&x).unwrap()[0].abs();
                assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300) + 1e-300, "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn regularity_examples() {
        let w = regularity_witness(&ApproxFunction::phi(1.0).unwrap(), &z_grid());
        assert_eq!((w.a, w.b, w.ok), (2.0, 0.5, true));
        let w = regularity_witness(&ApproxFunction::constant(3.0).unwrap(), &z_grid());
        assert_eq!((w.a, w.b, w.ok), (2.0, 1.0, true));
        let w = regularity_witness(&"pl:C=1,s=1,j=1".parse().unwrap(), &z_grid());
        assert_eq!((w.a, w.b, w.ok), (2.0, 0.5, true));
        let w = regularity_witness(&"pl:C=2,s=0.5,j=3;pl:C=1,s=2,j=0".parse().unwrap(), &z_grid());
        assert_eq!(w.b, 0.25);
        assert!(w.ok);
    }

    #[test]
    fn scaling_maps_b_sets_into_smaller_b_sets() {
        // t·B_{f,ε,ν,T} ⊆ B_{f,t^d ε,ν,tT} for t in (0,1).
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let cases = [
            (
                TargetFunction::signed_power(2, 1, 2.0).unwrap(),
                Norm::split(2, 1, 2.0).unwrap(),
            ),
            (TargetFunction::product(3).unwrap(), Norm::max(3)),
            (
                TargetFunction::max_power(vec![2.0, 0.5], 3).unwrap(),
                Norm::ld(3, 1.5).unwrap(),
            ),
        ];
        for (f, norm) in &cases {
            let d = f.degrees()[0];
            let mut hits = 0;
            while hits < 2_000 {
                let big_t: f64 = rng.random_range(1.0..20.0);
                let eps: f64 = rng.random_range(0.1..5.0);
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-big_t..big_t)).collect();
                if !b_set_contains(f, &[eps], norm, big_t, &x) {
                    continue;
                }
                hits += 1;
                let t: f64 = rng.random_range(0.0..1.0);
                let tx: Vec<f64> = x.iter().map(|v| t * v).collect();
                let eps_t = t.powf(d) * eps * (1.0 + 1e-12);
                assert!(b_set_contains(f, &[eps_t], norm, t * big_t * (1.0 + 1e-12), &tx));
            }
        }
    }
}
