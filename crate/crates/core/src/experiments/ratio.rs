//! Counts of lattice points in growing shells of `A_{f,ψ,ν}` against the
//! Siegel prediction `c_P·m(shell)`.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::{siegel_constant, ExperimentConfig};
use crate::enumerate::{for_each_solution, Bound, CountQuery, NormSpace};
use crate::error::{Error, Result};
use crate::haar::UnimodularMap;
use crate::norm::Norm;
use crate::points::PointClass;
use crate::psi::ApproxFunction;
use crate::schedule::DyadicSchedule;
use crate::target::TargetFunction;
use crate::volume::{classify_series, shell_volume, threshold_m, Convergence, Criterion};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub k: i32,
    pub t: f64,
    pub count: u64,
    /// `c_P·m({M < ν ≤ t} ∩ A_{f,ψ,ν})`.
    pub expected: f64,
    /// `count/expected`, missing when nothing is expected.
    pub ratio: Option<f64>,
}

/// Ratio series for one map `g`: lattice points `w = g·v` with
/// `M < ν(w) ≤ t_k` and `|f(w)| ≼ ψ(ν(w))`, where `M` is the validity
/// threshold of the closed-form volume.
pub fn counting_ratio(
    g: &UnimodularMap,
    f: &TargetFunction,
    psi: &ApproxFunction,
    norm: &Norm,
    class: PointClass,
    schedule: &DyadicSchedule,
) -> Result<(f64, Vec<RatioPoint>)> {
    if classify_series(Criterion::Asymptotic, f, psi)? != Convergence::Diverges {
        return Err(Error::Precondition(
            "the approximation set has finite volume; the counting ratio is not meaningful".into(),
        ));
    }
    let m = threshold_m(f, psi)?;
    let c = siegel_constant(class, f.dim())?;
    let grid = schedule.points();
    let t_max = grid.last().map_or(0.0, |p| p.1);
    let mut radii = Vec::new();
    if t_max > m {
        let q = CountQuery::new(
            g.clone(),
            f.clone(),
            Bound::Psi(psi.clone()),
            norm.clone(),
            class,
            m,
            t_max,
        )?
        .in_space(NormSpace::Image);
        for_each_solution(&q, |_, w| {
            radii.push(norm.value(w));
            ControlFlow::Continue(())
        })?;
    }
    radii.sort_by(f64::total_cmp);
    let mut points = Vec::with_capacity(grid.len());
    for (k, t) in grid {
        let (count, expected) = if t > m {
            let count = radii.partition_point(|r| *r <= t) as u64;
            (count, c * shell_volume(f, psi, norm, m, t)?.value)
        } else {
            (0, 0.0)
        };
        let ratio = (expected > 0.0).then(|| count as f64 / expected);
        points.push(RatioPoint {
            k,
            t,
            count,
            expected,
            ratio,
        });
    }
    Ok((m, points))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSample {
    pub master_seed: u64,
    pub sample: u64,
    pub threshold: f64,
    pub points: Vec<RatioPoint>,
    pub first_ratio: Option<f64>,
    pub final_ratio: Option<f64>,
    /// Final ratio in `[0.5, 2]` and closer to 1 than the first one.
    pub trend_ok: bool,
}

pub fn counting_ratio_experiment(cfg: &ExperimentConfig) -> Result<Vec<RatioSample>> {
    cfg.validate()?;
    cfg.map_samples(|i, g| {
        let (threshold, points) = counting_ratio(&g, &cfg.target, &cfg.psi, &cfg.norm, cfg.point_class, &cfg.schedule)?;
        let mut ratios = points.iter().filter_map(|p| p.ratio);
        let first_ratio = ratios.next();
        let final_ratio = ratios.next_back().or(first_ratio);
        let trend_ok = match (first_ratio, final_ratio) {
            (Some(a), Some(b)) => (0.5..=2.0).contains(&b) && (b - 1.0).abs() < (a - 1.0).abs(),
            _ => false,
        };
        Ok(RatioSample {
            master_seed: cfg.master_seed,
            sample: i,
            threshold,
            points,
            first_ratio,
            final_ratio,
            trend_ok,
        })
    })
}
