//! Statistical harnesses over random lattices and random unimodular maps.
//!
//! Every experiment draws sample `i` from the stream `derive_rng(seed, i)`
//! and returns its per-sample records ordered by index, so the output only
//! depends on the configuration and the master seed.

mod dichotomy;
mod lattice_counts;
mod normcheck;
mod ratio;
mod volcheck;
mod window;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dichotomy::{
    kg_system_experiment, uniform_approx_experiment, zero_full_experiment, KgReport, KgSample, UniformReport,
    UniformSample, ZeroFullReport, ZeroFullSample,
};
pub use lattice_counts::{
    ball_radius, empty_probability_experiment, rogers_variance_experiment, siegel_mean_experiment, ClassMean,
    EmptyPoint, EmptyReport, GridSample, LatticeGridConfig, RogersPoint, SiegelConfig, SiegelReport, SiegelSample,
};
pub use normcheck::{norm_independence_check, NormCheckPoint, NormCheckReport};
pub use ratio::{counting_ratio, counting_ratio_experiment, RatioPoint, RatioSample};
pub use volcheck::{volume_cross_validation, volume_test_matrix, VolumeCase, VolumeCheck};
pub use window::{window_sandwich_experiment, SandwichReport, SandwichSample};

use crate::error::{check_dim, Error, Result};
use crate::haar::{sample_in_window, CompactWindow, LatticeSampler, UnimodularMap, WINDOW_RETRY_CAP};
use crate::norm::Norm;
use crate::points::PointClass;
use crate::psi::ApproxFunction;
use crate::rng::derive_rng;
use crate::schedule::DyadicSchedule;
use crate::target::TargetFunction;
use crate::volume::zeta_fn;

/// Mean, unbiased variance and extremes of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatSummary {
    pub mean: f64,
    pub variance: f64,
    pub stderr: f64,
    pub sample_count: u64,
    pub min: f64,
    pub max: f64,
}

impl StatSummary {
    pub fn empty() -> Self {
        StatSummary {
            mean: 0.0,
            variance: 0.0,
            stderr: 0.0,
            sample_count: 0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    pub fn from_values(values: &[f64]) -> Self {
        values
            .iter()
            .fold(StatSummary::empty(), |acc, &x| acc.merge(&StatSummary::single(x)))
    }

    fn single(x: f64) -> Self {
        StatSummary {
            mean: x,
            variance: 0.0,
            stderr: 0.0,
            sample_count: 1,
            min: x,
            max: x,
        }
    }

    fn sum_sq(&self) -> f64 {
        if self.sample_count < 2 {
            0.0
        } else {
            self.variance * (self.sample_count - 1) as f64
        }
    }

    /// Pooled summary of two disjoint samples.
    pub fn merge(&self, other: &StatSummary) -> StatSummary {
        if self.sample_count == 0 {
            return *other;
        }
        if other.sample_count == 0 {
            return *self;
        }
        let (na, nb) = (self.sample_count as f64, other.sample_count as f64);
        let n = na + nb;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * nb / n;
        let m2 = self.sum_sq() + other.sum_sq() + delta * delta * na * nb / n;
        let count = self.sample_count + other.sample_count;
        let variance = if count > 1 { (m2 / (n - 1.0)).max(0.0) } else { 0.0 };
        StatSummary {
            mean,
            variance,
            stderr: (variance / n).sqrt(),
            sample_count: count,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }
}

/// Whether sampled maps carry a random translation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    #[default]
    Sl,
    Asl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub target: TargetFunction,
    pub psi: ApproxFunction,
    pub norm: Norm,
    pub point_class: PointClass,
    pub group: Group,
    /// Restricts draws to a compact window by rejection.
    pub window: Option<CompactWindow>,
    pub schedule: DyadicSchedule,
    pub samples: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub sampler: LatticeSampler,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::invalid("samples", "must be at least 1"));
        }
        check_dim(self.n, self.target.dim())?;
        check_dim(self.n, self.norm.dim())?;
        check_dim(self.target.outputs(), self.psi.len())?;
        self.target.validate()?;
        Ok(())
    }

    /// The `index`-th sampled map.
    pub fn sample_map(&self, index: u64) -> Result<UnimodularMap> {
        let mut rng = derive_rng(self.master_seed, index);
        match &self.window {
            Some(w) => Ok(sample_in_window(self.n, &mut rng, w, &self.norm, WINDOW_RETRY_CAP)?.map),
            None => self.sampler.sample(self.n, &mut rng, self.group == Group::Asl),
        }
    }

    /// Runs `per_sample` on every sample index in parallel, keeping index order.
    pub(crate) fn map_samples<T, F>(&self, per_sample: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64, UnimodularMap) -> Result<T> + Sync,
    {
        (0..self.samples as u64)
            .into_par_iter()
            .map(|i| per_sample(i, self.sample_map(i)?))
            .collect()
    }
}

/// The Siegel constant `c_P`: `1/ζ(n)` for primitive points, else 1.
pub fn siegel_constant(class: PointClass, n: usize) -> Result<f64> {
    match class {
        PointClass::Primitive if n >= 2 => Ok(1.0 / zeta_fn(n as f64)?),
        PointClass::Primitive => Err(Error::invalid("n", "primitive points need n ≥ 2")),
        _ => Ok(1.0),
    }
}

/// Counts of one sampled lattice in a shell, as persisted per sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub master_seed: u64,
    pub sample: u64,
    pub count: u64,
    pub visited: u64,
    pub first_witness: Option<Vec<i64>>,
}

/// Least-squares slope of `y` against `x`.
pub fn regression_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    cov / var
}

/// Wilson score interval for `k` successes in `n` trials at `z` sigmas.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn summary_of_known_values() {
        let s = StatSummary::from_values(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!((s.stderr - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        assert_eq!((s.min, s.max, s.sample_count), (1.0, 4.0, 4));
        assert_eq!(StatSummary::from_values(&[]).sample_count, 0);
    }

    #[test]
    fn constants() {
        assert_eq!(siegel_constant(PointClass::AllNonzero, 3).unwrap(), 1.0);
        let c = siegel_constant(PointClass::Primitive, 2).unwrap();
        assert!((c - 6.0 / std::f64::consts::PI.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn wilson_examples() {
        let (lo, hi) = wilson_interval(0, 100, 1.96);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.03 && hi < 0.04);
        let (lo, hi) = wilson_interval(50, 100, 1.96);
        assert!(lo < 0.5 && hi > 0.5 && (0.5 - lo - (hi - 0.5)).abs() < 1e-12);
    }

    #[test]
    fn slope_of_a_line() {
        assert!((regression_slope(&[0.0, 1.0, 2.0], &[1.0, -1.0, -3.0]) + 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn merge_matches_direct_summary(values in prop::collection::vec(-1e3f64..1e3, 1..60), split in 0usize..60) {
            let split = split.min(values.len());
            let (a, b) = values.split_at(split);
            let merged = StatSummary::from_values(a).merge(&StatSummary::from_values(b));
            let direct = StatSummary::from_values(&values);
            prop_assert!((merged.mean - direct.mean).abs() <= 1e-9 * (1.0 + direct.mean.abs()));
            prop_assert!((merged.variance - direct.variance).abs() <= 1e-8 * (1.0 + direct.variance));
            prop_assert!(merged.variance >= 0.0);
            prop_assert!((merged.stderr - (merged.variance / merged.sample_count as f64).sqrt()).abs() < 1e-12 * (1.0 + merged.stderr));
            prop_assert_eq!((merged.min, merged.max), (direct.min, direct.max));
        }
    }
}
