//! Monte Carlo comparison of approximation-set volumes under two norms.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::norm::Norm;
use crate::psi::ApproxFunction;
use crate::rng::derive_rng;
use crate::target::TargetFunction;
use crate::volume::{monte_carlo_region_volume, VolumeResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormCheckPoint {
    pub s: f64,
    pub t: f64,
    pub volumes: [VolumeResult; 2],
    /// Whether each volume reaches the threshold.
    pub large: [bool; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormCheckReport {
    pub threshold: f64,
    pub points: Vec<NormCheckPoint>,
    /// Both norms are large, or both small, at every scale.
    pub agree: bool,
}

/// Volumes of `{S ≤ ν(x) ≤ T, |f(x)| ≼ ψ(ν(x))}` for both norms on each
/// `(S, T)` of the scale grid. Both norms see the same random stream at a
/// given scale, so equal norms give equal estimates.
pub fn norm_independence_check(
    f: &TargetFunction,
    psi: &ApproxFunction,
    norms: [&Norm; 2],
    scales: &[(f64, f64)],
    samples: u64,
    threshold: f64,
    master_seed: u64,
) -> Result<NormCheckReport> {
    for norm in norms {
        check_dim(f.dim(), norm.dim())?;
    }
    if scales.is_empty() {
        return Err(Error::invalid("scales", "at least one (S, T) pair is required"));
    }
    let mut points = Vec::with_capacity(scales.len());
    for (i, &(s, t)) in scales.iter().enumerate() {
        let mut volumes = Vec::with_capacity(2);
        for norm in norms {
            let mut rng = derive_rng(master_seed, i as u64);
            volumes.push(monte_carlo_region_volume(f, psi, norm, s, t, samples, &mut rng)?);
        }
        let volumes = [volumes[0], volumes[1]];
        let large = [volumes[0].value >= threshold, volumes[1].value >= threshold];
        points.push(NormCheckPoint { s, t, volumes, large });
    }
    let agree = points.iter().all(|p| p.large[0] == p.large[1]);
    Ok(NormCheckReport {
        threshold,
        points,
        agree,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_norms_give_identical_volumes() {
        let f = TargetFunction::product(2).unwrap();
        let psi = ApproxFunction::phi(1.0).unwrap();
        let norm = Norm::max(2);
        let r = norm_independence_check(&f, &psi, [&norm, &norm], &[(1.0, 4.0), (4.0, 16.0)], 20_000, 0.5, 3).unwrap();
        for p in &r.points {
            assert_eq!(p.volumes[0], p.volumes[1]);
        }
        assert!(r.agree);
    }

    #[test]
    fn divergent_volumes_grow_under_both_norms() {
        let f = TargetFunction::product(2).unwrap();
        let psi = ApproxFunction::constant(1.0).unwrap();
        let max = Norm::max(2);
        let l2 = Norm::ld(2, 2.0).unwrap();
        let scales = [(1.0, 8.0), (1.0, 32.0), (1.0, 128.0)];
        let r = norm_independence_check(&f, &psi, [&max, &l2], &scales, 200_000, 1.0, 7).unwrap();
        for k in 0..2 {
            assert!(r.points[0].volumes[k].value < r.points[2].volumes[k].value);
        }
        assert!(r.agree);
    }
}
