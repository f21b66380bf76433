//! Upper sandwich for windowed affine maps: counts over `(2DE, T]` against
//! `c_P·(1+δ)` times the volume with an inflated `J·ψ` over
//! `(E, D·T + E]`, where `D`, `E` are the window constants of the batch.

use serde::{Deserialize, Serialize};

use super::{siegel_constant, ExperimentConfig};
use crate::enumerate::{count_solutions, Bound, CountQuery};
use crate::error::{Error, Result};
use crate::haar::{window_constants, WindowConstants};
use crate::volume::{shell_volume, threshold_m};

/// Fraction of samples that must satisfy the bound for a `J` to count.
pub const MAJORITY: f64 = 0.8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichSample {
    pub master_seed: u64,
    pub sample: u64,
    pub count: u64,
    /// One entry per inflation factor.
    pub within_bound: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InflationRow {
    pub j: f64,
    pub volume: f64,
    pub bound: f64,
    pub fraction_within: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub constants: WindowConstants,
    pub lower: f64,
    pub t: f64,
    pub rows: Vec<InflationRow>,
    /// Smallest inflation with at least [`MAJORITY`] of samples in bound.
    pub tightest_j: Option<f64>,
    pub samples: Vec<SandwichSample>,
}

pub fn window_sandwich_experiment(
    cfg: &ExperimentConfig,
    t: f64,
    delta: f64,
    j_grid: &[f64],
) -> Result<SandwichReport> {
    cfg.validate()?;
    if cfg.window.is_none() {
        return Err(Error::invalid("window", "the sandwich needs a compact window"));
    }
    if j_grid.is_empty() || j_grid.iter().any(|j| !(*j >= 1.0)) {
        return Err(Error::invalid("j", "inflation factors must be at least 1"));
    }
    let maps = cfg.map_samples(|_, g| Ok(g))?;
    let constants = window_constants(&maps, &cfg.norm);
    let WindowConstants { d_k, e_k } = constants;
    let lower = 2.0 * d_k * e_k;
    if lower >= t {
        return Err(Error::invalid("t", format!("must exceed 2·D·E = {lower}")));
    }
    let c = siegel_constant(cfg.point_class, cfg.n)?;
    let outer = d_k * t + e_k;
    let mut rows = Vec::with_capacity(j_grid.len());
    for &j in j_grid {
        let psi = cfg.psi.scaled(j)?;
        let start = e_k.max(threshold_m(&cfg.target, &psi)?);
        let volume = if start < outer {
            shell_volume(&cfg.target, &psi, &cfg.norm, start, outer)?.value
        } else {
            0.0
        };
        rows.push(InflationRow {
            j,
            volume,
            bound: c * (1.0 + delta) * volume,
            fraction_within: 0.0,
        });
    }
    let mut samples = Vec::with_capacity(maps.len());
    for (i, g) in maps.into_iter().enumerate() {
        let q = CountQuery::new(
            g,
            cfg.target.clone(),
            Bound::Psi(cfg.psi.clone()),
            cfg.norm.clone(),
            cfg.point_class,
            lower,
            t,
        )?;
        let count = count_solutions(&q)?.count;
        samples.push(SandwichSample {
            master_seed: cfg.master_seed,
            sample: i as u64,
            count,
            within_bound: rows.iter().map(|r| count as f64 <= r.bound).collect(),
        });
    }
    for (k, row) in rows.iter_mut().enumerate() {
        let ok = samples.iter().filter(|s| s.within_bound[k]).count();
        row.fraction_within = ok as f64 / samples.len() as f64;
    }
    let tightest_j = rows.iter().find(|r| r.fraction_within >= MAJORITY).map(|r| r.j);
    Ok(SandwichReport {
        constants,
        lower,
        t,
        rows,
        tightest_j,
        samples,
    })
}
