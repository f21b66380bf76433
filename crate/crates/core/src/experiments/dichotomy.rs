//! Approximability of `f∘g` for sampled `g`: new solutions in a far shell,
//! dyadic nonemptiness checks, and systems of linear forms.

use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::enumerate::{count_solutions, for_each_solution, Bound, CountQuery};
use crate::error::{Error, Result};
use crate::norm::Norm;
use crate::target::TargetFunction;
use crate::volume::{classify_series, Convergence, Criterion};

fn query(cfg: &ExperimentConfig, g: crate::haar::UnimodularMap, bound: Bound, t0: f64, t: f64) -> Result<CountQuery> {
    CountQuery::new(g, cfg.target.clone(), bound, cfg.norm.clone(), cfg.point_class, t0, t)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroFullSample {
    pub master_seed: u64,
    pub sample: u64,
    pub found: bool,
    pub witness: Option<Vec<i64>>,
    pub visited: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroFullReport {
    /// Classification of the volume integral.
    pub regime: Convergence,
    pub t_split: f64,
    pub t_max: f64,
    pub hits: u64,
    pub samples: u64,
    pub fraction: f64,
}

/// Fraction of sampled `g` with a solution `v` in the shell
/// `T_split < ν(v) ≤ T_max`.
pub fn zero_full_experiment(
    cfg: &ExperimentConfig,
    t_split: f64,
    t_max: f64,
) -> Result<(ZeroFullReport, Vec<ZeroFullSample>)> {
    cfg.validate()?;
    if !(t_split < t_max) {
        return Err(Error::invalid("t_split", "must be below t_max"));
    }
    let regime = classify_series(Criterion::Asymptotic, &cfg.target, &cfg.psi)?;
    let records = cfg.map_samples(|i, g| {
        let q = query(cfg, g, Bound::Psi(cfg.psi.clone()), t_split, t_max)?.first_witness_only();
        let r = count_solutions(&q)?;
        Ok(ZeroFullSample {
            master_seed: cfg.master_seed,
            sample: i,
            found: r.count > 0,
            witness: r.first_witness,
            visited: r.visited,
        })
    })?;
    let hits = records.iter().filter(|r| r.found).count() as u64;
    let samples = records.len() as u64;
    Ok((
        ZeroFullReport {
            regime,
            t_split,
            t_max,
            hits,
            samples,
            fraction: hits as f64 / samples as f64,
        },
        records,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformCheck {
    pub k: i32,
    pub t: f64,
    pub nonempty: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformSample {
    pub master_seed: u64,
    pub sample: u64,
    pub checks: Vec<UniformCheck>,
    /// First schedule index from which every check succeeds.
    pub k_star: Option<i32>,
    /// Whether the sample has a solution with `ν(v) ≤ t_max` under the
    /// ψ-dependent bound.
    pub asymptotic_witness: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformReport {
    /// Classification of the dyadic series with `r = 2`.
    pub regime: Convergence,
    pub passing: u64,
    pub samples: u64,
    pub fraction: f64,
}

/// Checks `B_{f∘g, ψ(t_k), ν, t_k} ∩ P ≠ ∅` at every schedule point.
pub fn uniform_approx_experiment(cfg: &ExperimentConfig) -> Result<(UniformReport, Vec<UniformSample>)> {
    cfg.validate()?;
    if !cfg.schedule.is_quasi_geometric() {
        return Err(Error::invalid("schedule", "must be quasi-geometric"));
    }
    let regime = classify_series(Criterion::Uniform { r: 2.0 }, &cfg.target, &cfg.psi)?;
    let grid = cfg.schedule.points();
    let t_max = grid.last().map_or(0.0, |p| p.1);
    let records = cfg.map_samples(|i, g| {
        let mut checks = Vec::with_capacity(grid.len());
        for &(k, t) in &grid {
            let q = query(cfg, g.clone(), Bound::Fixed(cfg.psi.eval(t)), 0.0, t)?.first_witness_only();
            checks.push(UniformCheck {
                k,
                t,
                nonempty: count_solutions(&q)?.count > 0,
            });
        }
        let tail = checks.iter().rev().take_while(|c| c.nonempty).count();
        let k_star = (tail > 0).then(|| checks[checks.len() - tail].k);
        let q = query(cfg, g, Bound::Psi(cfg.psi.clone()), 0.0, t_max)?.first_witness_only();
        Ok(UniformSample {
            master_seed: cfg.master_seed,
            sample: i,
            checks,
            k_star,
            asymptotic_witness: count_solutions(&q)?.count > 0,
        })
    })?;
    let passing = records.iter().filter(|r| r.k_star.is_some()).count() as u64;
    let samples = records.len() as u64;
    Ok((
        UniformReport {
            regime,
            passing,
            samples,
            fraction: passing as f64 / samples as f64,
        },
        records,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellCount {
    pub k: i32,
    pub t: f64,
    /// Solutions with `t_{k−1} < ν(v) ≤ t_k` (`t_{−1} = 0`).
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KgSample {
    pub master_seed: u64,
    pub sample: u64,
    pub shells: Vec<ShellCount>,
    pub total: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KgReport {
    /// Classification of `∫ Π ψ_i(z) z^{n−ℓ−1} dz`.
    pub regime: Convergence,
    pub samples: Vec<KgSample>,
}

/// Solutions of `|(g·v)_i| ≤ ψ_i(ν(v))` for `i < ℓ` under the maximum norm,
/// counted per schedule shell. The target must be
/// [`TargetFunction::linear_forms`].
pub fn kg_system_experiment(cfg: &ExperimentConfig) -> Result<KgReport> {
    cfg.validate()?;
    let ell = cfg.psi.len();
    if ell >= cfg.n || cfg.target != TargetFunction::linear_forms(ell, cfg.n)? {
        return Err(Error::invalid("f", "expected a system of ℓ < n linear forms"));
    }
    if cfg.norm != Norm::max(cfg.n) {
        return Err(Error::invalid("norm", "systems of linear forms use the maximum norm"));
    }
    let regime = classify_series(Criterion::Asymptotic, &cfg.target, &cfg.psi)?;
    let grid = cfg.schedule.points();
    let t_max = grid.last().map_or(0.0, |p| p.1);
    let samples = cfg.map_samples(|i, g| {
        let mut shells: Vec<ShellCount> = grid.iter().map(|&(k, t)| ShellCount { k, t, count: 0 }).collect();
        let q = query(cfg, g, Bound::Psi(cfg.psi.clone()), 0.0, t_max)?;
        let norm = &cfg.norm;
        for_each_solution(&q, |v, _| {
            let vf: Vec<f64> = v.iter().map(|x| *x as f64).collect();
            let r = norm.value(&vf);
            if let Some(s) = shells.iter_mut().find(|s| r <= s.t) {
                s.count += 1;
            }
            ControlFlow::Continue(())
        })?;
        let total = shells.iter().map(|s| s.count).sum();
        Ok(KgSample {
            master_seed: cfg.master_seed,
            sample: i,
            shells,
            total,
        })
    })?;
    Ok(KgReport { regime, samples })
}
