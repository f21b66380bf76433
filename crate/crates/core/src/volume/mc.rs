use rand::Rng;
use rayon::prelude::*;

use super::{Method, VolumeResult};
use crate::error::{check_dim, Error, Result};
use crate::norm::Norm;
use crate::order::abs_leq;
use crate::psi::ApproxFunction;
use crate::rng::{derive_rng, SimRng};
use crate::target::TargetFunction;

const CHUNK: u64 = 1 << 16;

/// Hit count of `samples` uniform draws from `[−w, w]^n`, drawn in fixed
/// chunks with per-chunk derived generators so the result does not depend
/// on the thread count.
pub fn monte_carlo_hits<P>(n: usize, half_width: f64, samples: u64, rng: &mut SimRng, predicate: P) -> u64
where
    P: Fn(&[f64]) -> bool + Sync,
{
    let master: u64 = rng.random();
    let chunks = samples.div_ceil(CHUNK);
    (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut local = derive_rng(master, c);
            let len = CHUNK.min(samples - c * CHUNK);
            let mut x = vec![0.0; n];
            let mut hits = 0u64;
            for _ in 0..len {
                for xi in x.iter_mut() {
                    *xi = local.random_range(-half_width..half_width);
                }
                if predicate(&x) {
                    hits += 1;
                }
            }
            hits
        })
        .sum()
}

/// Monte Carlo estimate of `m({x : S ≤ ν(x) ≤ T, |f(x)| ≼ ψ(ν(x))})`.
///
/// Samples the box `[−T, T]^n`, which contains the ν-ball of radius `T`
/// because every block norm dominates the maximum norm.
pub fn monte_carlo_region_volume(
    f: &TargetFunction,
    psi: &ApproxFunction,
    norm: &Norm,
    s: f64,
    t: f64,
    samples: u64,
    rng: &mut SimRng,
) -> Result<VolumeResult> {
    let n = f.dim();
    check_dim(n, norm.dim())?;
    check_dim(f.outputs(), psi.len())?;
    if samples == 0 {
        return Err(Error::invalid("samples", "must be at least 1"));
    }
    if !(t.is_finite() && t > 0.0 && s >= 0.0 && s <= t) {
        return Err(Error::invalid("T", "need 0 ≤ S ≤ T with T > 0"));
    }
    let ell = f.outputs();
    let hits = monte_carlo_hits(n, t, samples, rng, |x| {
        let r = norm.value(x);
        if r < s || r > t {
            return false;
        }
        let mut fx = [0.0f64; 8];
        let mut bound = [0.0f64; 8];
        let (fx, bound) = if ell <= 8 {
            (&mut fx[..ell], &mut bound[..ell])
        } else {
            return region_contains_slow(f, psi, x, r);
        };
        f.eval_into(x, fx);
        psi.eval_into(r, bound);
        abs_leq(fx, bound)
    });
    Ok(binomial_estimate((2.0 * t).powi(n as i32), hits, samples))
}

fn region_contains_slow(f: &TargetFunction, psi: &ApproxFunction, x: &[f64], r: f64) -> bool {
    let mut fx = vec![0.0; f.outputs()];
    f.eval_into(x, &mut fx);
    abs_leq(&fx, &psi.eval(r))
}

/// Box volume times the hit fraction, with the binomial standard error.
pub fn binomial_estimate(box_volume: f64, hits: u64, samples: u64) -> VolumeResult {
    let p = hits as f64 / samples as f64;
    let stderr = box_volume * (p * (1.0 - p) / samples as f64).sqrt();
    VolumeResult {
        value: box_volume * p,
        abs_error: stderr,
        method: Method::MonteCarlo,
        stderr: Some(stderr),
        samples: Some(samples),
        degenerate: hits == 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::volume::unit_ball_volume_ld;

    #[test]
    fn whole_ball_volume() {
        let f = TargetFunction::signed_power(1, 1, 2.0).unwrap();
        let norm = Norm::split(1, 1, 2.0).unwrap();
        let psi = ApproxFunction::constant(1e9).unwrap();
        let r = monte_carlo_region_volume(&f, &psi, &norm, 0.0, 2.0, 1_000_000, &mut rng_from_seed(1)).unwrap();
        assert!((r.value - 16.0).abs() < 1e-9);
        let l2 = Norm::ld(2, 2.0).unwrap();
        let r = monte_carlo_region_volume(&f, &psi, &l2, 0.0, 2.0, 1_000_000, &mut rng_from_seed(2)).unwrap();
        let exact = unit_ball_volume_ld(2, crate::norm::Exponent::Finite(2.0)).0 * 4.0;
        assert!((r.value - exact).abs() < 3.0 * r.stderr.unwrap());
    }

    #[test]
    fn tiny_region_is_degenerate() {
        let f = TargetFunction::product(2).unwrap();
        let psi = ApproxFunction::constant(1e-300).unwrap();
        let r = monte_carlo_region_volume(&f, &psi, &Norm::max(2), 0.0, 1.0, 10_000, &mut rng_from_seed(3)).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.stderr, Some(0.0));
        assert!(r.degenerate);
    }

    #[test]
    fn estimates_are_reproducible() {
        let f = TargetFunction::product(3).unwrap();
        let psi = ApproxFunction::constant(1.0).unwrap();
        let a = monte_carlo_region_volume(&f, &psi, &Norm::max(3), 1.0, 3.0, 200_000, &mut rng_from_seed(4)).unwrap();
        let b = monte_carlo_region_volume(&f, &psi, &Norm::max(3), 1.0, 3.0, 200_000, &mut rng_from_seed(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_input() {
        let f = TargetFunction::product(2).unwrap();
        let psi = ApproxFunction::constant(1.0).unwrap();
        let mut rng = rng_from_seed(5);
        assert!(monte_carlo_region_volume(&f, &psi, &Norm::max(2), 0.0, 1.0, 0, &mut rng).is_err());
        assert!(monte_carlo_region_volume(&f, &psi, &Norm::max(3), 0.0, 1.0, 10, &mut rng).is_err());
        assert!(monte_carlo_region_volume(&f, &psi, &Norm::max(2), 2.0, 1.0, 10, &mut rng).is_err());
    }
}
