//! Lattice point counts in centered balls: Siegel means, Rogers variances
//! and empty probabilities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{regression_slope, siegel_constant, wilson_interval, StatSummary};
use crate::enumerate::{lattice_points_in_region, ClassCounts};
use crate::error::{Error, Result};
use crate::haar::LatticeSampler;
use crate::norm::Norm;
use crate::points::{is_primitive, PointClass};
use crate::rng::derive_rng;
use crate::volume::unit_ball_volume_ld;

/// Lattices (or affine grids) counted in balls of the given volumes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeGridConfig {
    pub n: usize,
    pub volumes: Vec<f64>,
    pub norm: Norm,
    pub affine: bool,
    pub samples: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub sampler: LatticeSampler,
}

pub type SiegelConfig = LatticeGridConfig;

impl LatticeGridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::invalid("samples", "must be at least 1"));
        }
        if self.volumes.is_empty() {
            return Err(Error::invalid("volumes", "at least one volume is required"));
        }
        if self.volumes.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid("volumes", "must be finite and nonnegative"));
        }
        if self.n < 2 {
            return Err(Error::invalid("n", "must be at least 2"));
        }
        if self.norm.dim() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: self.norm.dim(),
            });
        }
        Ok(())
    }
}

/// Radius of the centered ν-ball of the given volume.
pub fn ball_radius(norm: &Norm, volume: f64) -> f64 {
    let unit: f64 = norm
        .blocks()
        .iter()
        .map(|b| unit_ball_volume_ld(b.dim, b.exponent).0)
        .product();
    (volume / unit).powf(1.0 / norm.dim() as f64)
}

/// Per-sample counts, one entry per configured volume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSample {
    pub master_seed: u64,
    pub sample: u64,
    pub counts: Vec<ClassCounts>,
}

pub type SiegelSample = GridSample;

fn pick(c: &ClassCounts, class: PointClass) -> u64 {
    match class {
        PointClass::AllInteger => c.all,
        PointClass::AllNonzero => c.nonzero,
        PointClass::Primitive => c.primitive,
    }
}

fn grid_counts(cfg: &LatticeGridConfig) -> Result<Vec<GridSample>> {
    cfg.validate()?;
    let radii: Vec<f64> = cfg.volumes.iter().map(|v| ball_radius(&cfg.norm, *v)).collect();
    let r_max = radii.iter().copied().fold(0.0, f64::max);
    (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = derive_rng(cfg.master_seed, i);
            let g = cfg.sampler.sample(cfg.n, &mut rng, cfg.affine)?;
            let mut counts = vec![ClassCounts::default(); radii.len()];
            lattice_points_in_region(&g, &cfg.norm, r_max, |v, w| {
                let r = cfg.norm.value(w);
                let nonzero = v.iter().any(|x| *x != 0);
                let primitive = nonzero && is_primitive(v);
                for (c, radius) in counts.iter_mut().zip(&radii) {
                    if r <= *radius {
                        c.all += 1;
                        c.nonzero += nonzero as u64;
                        c.primitive += primitive as u64;
                    }
                }
            })?;
            Ok(GridSample {
                master_seed: cfg.master_seed,
                sample: i,
                counts,
            })
        })
        .collect()
}

fn summaries(samples: &[GridSample], index: usize, class: PointClass) -> (StatSummary, Vec<f64>) {
    let values: Vec<f64> = samples.iter().map(|s| pick(&s.counts[index], class) as f64).collect();
    (StatSummary::from_values(&values), values)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMean {
    pub volume: f64,
    pub class: PointClass,
    pub summary: StatSummary,
    pub constant: f64,
    /// Expected mean count: `c_P·V`, plus one for the origin when all
    /// points of a linear lattice are counted.
    pub reference: f64,
    /// `(mean − reference)/stderr`, zero when both agree exactly.
    pub z_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SiegelReport {
    pub means: Vec<ClassMean>,
}

impl SiegelReport {
    pub fn get(&self, volume: f64, class: PointClass) -> Option<&ClassMean> {
        self.means.iter().find(|m| m.volume == volume && m.class == class)
    }
}

/// Empirical mean counts against the Siegel reference for every volume and
/// every meaningful point class (nonzero and primitive points of lattices,
/// all points of affine grids).
pub fn siegel_mean_experiment(cfg: &SiegelConfig) -> Result<(SiegelReport, Vec<SiegelSample>)> {
    let samples = grid_counts(cfg)?;
    let classes: &[PointClass] = if cfg.affine {
        &[PointClass::AllInteger]
    } else {
        &[PointClass::AllNonzero, PointClass::Primitive, PointClass::AllInteger]
    };
    let mut means = Vec::new();
    for (idx, &volume) in cfg.volumes.iter().enumerate() {
        for &class in classes {
            let (summary, _) = summaries(&samples, idx, class);
            let constant = siegel_constant(class, cfg.n)?;
            let origin = if class == PointClass::AllInteger && !cfg.affine {
                1.0
            } else {
                0.0
            };
            let reference = constant * volume + origin;
            let diff = summary.mean - reference;
            let z_score = if diff == 0.0 { 0.0 } else { diff / summary.stderr };
            means.push(ClassMean {
                volume,
                class,
                summary,
                constant,
                reference,
                z_score,
            });
        }
    }
    Ok((SiegelReport { means }, samples))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RogersPoint {
    pub volume: f64,
    pub mean: f64,
    pub variance: f64,
    /// `variance/V`, or 0 for a zero volume.
    pub variance_over_volume: f64,
    /// Delta-method standard error of `variance/V`.
    pub ratio_stderr: f64,
    /// Set when `variance/V` exceeds the configured ceiling.
    pub flagged: bool,
}

/// Count variances per volume.
pub fn rogers_variance_experiment(
    cfg: &LatticeGridConfig,
    class: PointClass,
    ceiling: Option<f64>,
) -> Result<(Vec<RogersPoint>, Vec<GridSample>)> {
    let samples = grid_counts(cfg)?;
    let mut points = Vec::new();
    for (idx, &volume) in cfg.volumes.iter().enumerate() {
        let (summary, values) = summaries(&samples, idx, class);
        let n = values.len() as f64;
        let m4 = values.iter().map(|x| (x - summary.mean).powi(4)).sum::<f64>() / n;
        let s2 = summary.variance;
        let var_of_var = if n > 3.0 {
            ((m4 - s2 * s2 * (n - 3.0) / (n - 1.0)) / n).max(0.0)
        } else {
            f64::INFINITY
        };
        let (ratio, ratio_stderr) = if volume > 0.0 {
            (s2 / volume, var_of_var.sqrt() / volume)
        } else {
            (0.0, 0.0)
        };
        points.push(RogersPoint {
            volume,
            mean: summary.mean,
            variance: s2,
            variance_over_volume: ratio,
            ratio_stderr,
            flagged: ceiling.is_some_and(|c| ratio > c),
        });
    }
    Ok((points, samples))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmptyPoint {
    pub volume: f64,
    pub empty: u64,
    pub samples: u64,
    pub frequency: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
    /// `V^{1−r}`, the decay the bound predicts up to a constant.
    pub bound_shape: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmptyReport {
    pub points: Vec<EmptyPoint>,
    /// Slope of `log frequency` against `log V`, with zero frequencies
    /// floored at `0.5/samples`.
    pub slope: f64,
    /// Whether the last frequency is at most the first.
    pub decays: bool,
}

/// Frequency with which the ball holds no point of the class.
pub fn empty_probability_experiment(
    cfg: &LatticeGridConfig,
    class: PointClass,
    r: f64,
) -> Result<(EmptyReport, Vec<GridSample>)> {
    if !(r > 1.0) {
        return Err(Error::invalid("r", "must exceed 1"));
    }
    let samples = grid_counts(cfg)?;
    let total = samples.len() as u64;
    let points: Vec<EmptyPoint> = cfg
        .volumes
        .iter()
        .enumerate()
        .map(|(idx, &volume)| {
            let empty = samples.iter().filter(|s| pick(&s.counts[idx], class) == 0).count() as u64;
            let (wilson_low, wilson_high) = wilson_interval(empty, total, 1.96);
            EmptyPoint {
                volume,
                empty,
                samples: total,
                frequency: empty as f64 / total as f64,
                wilson_low,
                wilson_high,
                bound_shape: volume.powf(1.0 - r),
            }
        })
        .collect();
    let floor = 0.5 / total as f64;
    let positive: Vec<&EmptyPoint> = points.iter().filter(|p| p.volume > 0.0).collect();
    let slope = if positive.len() >= 2 {
        let x: Vec<f64> = positive.iter().map(|p| p.volume.ln()).collect();
        let y: Vec<f64> = positive.iter().map(|p| p.frequency.max(floor).ln()).collect();
        regression_slope(&x, &y)
    } else {
        f64::NAN
    };
    let decays = points.last().map(|p| p.frequency) <= points.first().map(|p| p.frequency);
    Ok((EmptyReport { points, slope, decays }, samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(n: usize, volumes: Vec<f64>, affine: bool, samples: usize) -> LatticeGridConfig {
        LatticeGridConfig {
            n,
            volumes,
            norm: Norm::ld(n, 2.0).unwrap(),
            affine,
            samples,
            master_seed: 17,
            sampler: LatticeSampler::default(),
        }
    }

    #[test]
    fn radius_inverts_volume() {
        let r = ball_radius(&Norm::ld(2, 2.0).unwrap(), std::f64::consts::PI * 4.0);
        assert!((r - 2.0).abs() < 1e-12);
        assert!((ball_radius(&Norm::max(3), 8.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_volume_has_no_nonzero_points() {
        let (report, _) = siegel_mean_experiment(&config(2, vec![0.0], false, 50)).unwrap();
        let m = report.get(0.0, PointClass::AllNonzero).unwrap();
        assert_eq!(m.summary.mean, 0.0);
        assert_eq!(m.z_score, 0.0);
        let (points, _) =
            rogers_variance_experiment(&config(2, vec![0.0], false, 50), PointClass::AllNonzero, None).unwrap();
        assert_eq!(points[0].variance, 0.0);
    }

    #[test]
    fn siegel_mean_small_run() {
        let (report, samples) = siegel_mean_experiment(&config(2, vec![20.0], false, 2000)).unwrap();
        assert_eq!(samples.len(), 2000);
        for class in [PointClass::AllNonzero, PointClass::Primitive] {
            let m = report.get(20.0, class).unwrap();
            assert!(m.z_score.abs() < 4.0, "{class}: {m:?}");
        }
    }

    #[test]
    fn tiny_balls_are_usually_empty() {
        let (report, _) =
            empty_probability_experiment(&config(2, vec![1e-3, 10.0], false, 500), PointClass::AllNonzero, 2.0)
                .unwrap();
        assert!(report.points[0].frequency > 0.95);
        assert_eq!(report.points[1].empty, 0);
        assert!(report.decays);
    }

    #[test]
    fn records_are_reproducible() {
        let cfg = config(3, vec![10.0, 30.0], true, 40);
        let a = rogers_variance_experiment(&cfg, PointClass::AllInteger, Some(3.0)).unwrap();
        let b = rogers_variance_experiment(&cfg, PointClass::AllInteger, Some(3.0)).unwrap();
        assert_eq!(a, b);
        for (i, s) in a.1.iter().enumerate() {
            assert_eq!(s.sample, i as u64);
            assert!(s.counts[0].all <= s.counts[1].all);
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(siegel_mean_experiment(&config(2, vec![10.0], false, 0)).is_err());
        assert!(siegel_mean_experiment(&config(2, vec![], false, 10)).is_err());
        assert!(empty_probability_experiment(&config(2, vec![1.0], false, 10), PointClass::AllNonzero, 1.0).is_err());
    }
}
