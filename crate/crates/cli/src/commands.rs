//! One function per subcommand. Each turns resolved parameters into a
//! [`Report`].

use anyhow::{anyhow, bail, Result};
use clap::Subcommand;
use serde::Serialize;
use serde_json::{json, Value};

use lattice_approx::enumerate::{brute_force_count, count_solutions, Bound, CountQuery, NormSpace};
use lattice_approx::experiments::{
    counting_ratio_experiment, empty_probability_experiment, kg_system_experiment, norm_independence_check,
    rogers_variance_experiment, siegel_mean_experiment, uniform_approx_experiment, volume_cross_validation,
    volume_test_matrix, window_sandwich_experiment, zero_full_experiment, ExperimentConfig, Group, LatticeGridConfig,
    VolumeCase,
};
use lattice_approx::rng::derive_rng;
use lattice_approx::volume::{
    classify_series, monte_carlo_region_volume, series_exponents, shell_volume, Criterion, VolumeResult,
};
use lattice_approx::{DyadicSchedule, Norm, NormSpec, PointClass, TargetFunction};

use crate::output::{Report, Table};
use crate::params::Params;

#[derive(Subcommand, Clone, Debug)]
pub enum Command {
    /// Closed-form shell volume at one point, or the 9-case test matrix.
    Volume(Params),
    /// Monte Carlo shell volume at one point, or the test matrix
    /// cross-checked against the closed forms.
    McVolume(Params),
    /// Counts integer solutions for a given or sampled map.
    Count(Params),
    /// Classifies the volume integral or the dyadic series.
    Classify(Params),
    /// Mean lattice point counts in balls against the Siegel constant.
    Siegel(Params),
    /// Variance of lattice point counts per volume.
    Rogers(Params),
    /// Frequency of balls with no lattice point.
    Emptyprob(Params),
    /// Solution counts in growing shells against the volume prediction.
    Ratio(Params),
    /// Solutions in a far shell, for either convergence regime.
    Zerofull(Params),
    /// Nonemptiness at every schedule point.
    Uniform(Params),
    /// Systems of linear forms counted per shell; the forms are the first
    /// `ℓ` coordinates, with `ℓ` the number of ψ components.
    Kgsystem(Params),
    /// Monte Carlo volumes under two norms at the same scales.
    Normcheck(Params),
    /// Window sandwich bounds on solution counts.
    Sandwich(Params),
    /// Quick built-in consistency checks.
    Selftest(Params),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Volume(_) => "volume",
            Command::McVolume(_) => "mc-volume",
            Command::Count(_) => "count",
            Command::Classify(_) => "classify",
            Command::Siegel(_) => "siegel",
            Command::Rogers(_) => "rogers",
            Command::Emptyprob(_) => "emptyprob",
            Command::Ratio(_) => "ratio",
            Command::Zerofull(_) => "zerofull",
            Command::Uniform(_) => "uniform",
            Command::Kgsystem(_) => "kgsystem",
            Command::Normcheck(_) => "normcheck",
            Command::Sandwich(_) => "sandwich",
            Command::Selftest(_) => "selftest",
        }
    }

    pub fn params(&self) -> &Params {
        match self {
            Command::Volume(p)
            | Command::McVolume(p)
            | Command::Count(p)
            | Command::Classify(p)
            | Command::Siegel(p)
            | Command::Rogers(p)
            | Command::Emptyprob(p)
            | Command::Ratio(p)
            | Command::Zerofull(p)
            | Command::Uniform(p)
            | Command::Kgsystem(p)
            | Command::Normcheck(p)
            | Command::Sandwich(p)
            | Command::Selftest(p) => p,
        }
    }

    /// Runs the command on `p`, the flags already merged with any config.
    pub fn run(&self, p: &Params) -> Result<Report> {
        match self {
            Command::Volume(_) => volume(p),
            Command::McVolume(_) => mc_volume(p),
            Command::Count(_) => count(p),
            Command::Classify(_) => classify(p),
            Command::Siegel(_) => siegel(p),
            Command::Rogers(_) => rogers(p),
            Command::Emptyprob(_) => emptyprob(p),
            Command::Ratio(_) => ratio(p),
            Command::Zerofull(_) => zerofull(p),
            Command::Uniform(_) => uniform(p),
            Command::Kgsystem(_) => kgsystem(p),
            Command::Normcheck(_) => normcheck(p),
            Command::Sandwich(_) => sandwich(p),
            Command::Selftest(_) => selftest(p),
        }
    }
}

const DEFAULT_MC_SAMPLES: u64 = 1_000_000;

fn seed(p: &Params) -> u64 {
    p.seed.unwrap_or(0)
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn to_value(x: &impl Serialize) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

fn family(f: &TargetFunction) -> &'static str {
    match f {
        TargetFunction::SignedPowerForm { .. } => "signed_power",
        TargetFunction::CoordinateProduct { .. } => "product",
        TargetFunction::MaxPower { .. } => "max_power",
        TargetFunction::VectorOf(_) => "vector",
    }
}

fn method(v: &VolumeResult) -> String {
    serde_json::to_value(v.method)
        .ok()
        .and_then(|m| m.as_str().map(str::to_string))
        .unwrap_or_default()
}

const VOLUME_HEADER: [&str; 7] = ["family", "params", "S", "T", "value", "error", "method"];

fn volume_row(case: &VolumeCase, v: &VolumeResult) -> Vec<String> {
    let error = v.stderr.unwrap_or(v.abs_error);
    vec![
        family(&case.target).into(),
        format!("f={} psi={} norm={}", case.target, case.psi, norm_label(&case.norm)),
        num(case.s),
        num(case.t),
        num(v.value),
        num(error),
        method(v),
    ]
}

fn norm_label(norm: &Norm) -> String {
    NormSpec::from(norm).to_string()
}

/// The single `(f, ψ, ν, S, T)` point named by `p`.
fn volume_case(p: &Params) -> Result<VolumeCase> {
    let target = p.target()?;
    let psi = p.psi()?;
    let norm = p.norm(target.dim())?;
    let s = p.s.unwrap_or(0.0);
    let t = Params::require(p.t, "t")?;
    if !(s >= 0.0 && s <= t) {
        bail!("invalid value for `s`: need 0 ≤ s ≤ t");
    }
    Ok(VolumeCase {
        target,
        psi,
        norm,
        s,
        t,
    })
}

fn volume(p: &Params) -> Result<Report> {
    let cases = match p.f {
        Some(_) => vec![volume_case(p)?],
        None => volume_test_matrix(),
    };
    let mut report = Report {
        summary: Table::new(&VOLUME_HEADER),
        ..Report::default()
    };
    for case in &cases {
        let v = shell_volume(&case.target, &case.psi, &case.norm, case.s, case.t)?;
        report.summary.push(volume_row(case, &v));
        report.records.push(json!({ "case": case, "volume": v }));
    }
    Ok(report)
}

fn mc_volume(p: &Params) -> Result<Report> {
    let samples = p.mc_samples.unwrap_or(DEFAULT_MC_SAMPLES);
    if samples == 0 {
        bail!("invalid value for `mc_samples`: must be at least 1");
    }
    let mut report = Report::default();
    if p.f.is_some() {
        let case = volume_case(p)?;
        let mut rng = derive_rng(seed(p), 0);
        let v = monte_carlo_region_volume(&case.target, &case.psi, &case.norm, case.s, case.t, samples, &mut rng)?;
        report.summary = Table::new(&VOLUME_HEADER);
        report.summary.push(volume_row(&case, &v));
        report
            .records
            .push(json!({ "master_seed": seed(p), "sample": 0, "case": case, "volume": v }));
        return Ok(report);
    }
    let mut header = VOLUME_HEADER.to_vec();
    header.extend(["closed_form", "z_score"]);
    report.summary = Table::new(&header);
    let checks = volume_cross_validation(&volume_test_matrix(), samples, seed(p))?;
    for (i, c) in checks.iter().enumerate() {
        let mut row = volume_row(&c.case, &c.monte_carlo);
        row.extend([num(c.closed_form.value), format!("{:.3}", c.z_score)]);
        report.summary.push(row);
        let mut rec = to_value(c)?;
        rec["master_seed"] = json!(seed(p));
        rec["sample"] = json!(i);
        report.records.push(rec);
    }
    Ok(report)
}

fn bound(p: &Params) -> Result<Bound> {
    match (&p.epsilon, &p.psi) {
        (Some(e), None) => Ok(Bound::Fixed(e.clone())),
        (None, Some(_)) => Ok(Bound::Psi(p.psi()?)),
        (Some(_), Some(_)) => bail!("invalid value for `epsilon`: give either `psi` or `epsilon`, not both"),
        (None, None) => Err(anyhow!("missing key `psi`")),
    }
}

fn count(p: &Params) -> Result<Report> {
    let target = p.target()?;
    let n = target.dim();
    let norm = p.norm(n)?;
    let class = p.point_class(PointClass::AllNonzero)?;
    let bound = bound(p)?;
    let t0 = p.t0.unwrap_or(0.0);
    let t = Params::require(p.t, "t")?;
    let space = p.space()?;
    let maps = match p.matrix()? {
        Some(g) => {
            if g.dim() != n {
                bail!(
                    "invalid value for `matrix_file`: dimension {} does not match n = {n}",
                    g.dim()
                );
            }
            vec![(0, g)]
        }
        None => {
            let sampler = p.sampler()?;
            let affine = p.group()? == Group::Asl;
            (0..p.samples()? as u64)
                .map(|i| Ok((i, sampler.sample(n, &mut derive_rng(seed(p), i), affine)?)))
                .collect::<Result<Vec<_>>>()?
        }
    };
    let mut report = Report {
        summary: Table::new(&["sample", "count", "visited", "first_witness"]),
        ..Report::default()
    };
    for (i, g) in maps {
        let q = CountQuery::new(g, target.clone(), bound.clone(), norm.clone(), class, t0, t)?.in_space(space);
        let r = count_solutions(&q)?;
        let witness = r
            .first_witness
            .as_ref()
            .map(|w| w.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" "))
            .unwrap_or_default();
        report
            .summary
            .push(vec![i.to_string(), r.count.to_string(), r.visited.to_string(), witness]);
        report.records.push(json!({
            "master_seed": seed(p),
            "sample": i,
            "count": r.count,
            "visited": r.visited,
            "first_witness": r.first_witness,
        }));
    }
    Ok(report)
}

fn criterion(p: &Params) -> Result<Criterion> {
    match p.criterion.as_deref() {
        None | Some("asymptotic") => Ok(Criterion::Asymptotic),
        Some("uniform") => {
            let r = p.r.unwrap_or(2.0);
            if r.is_nan() || r <= 1.0 {
                bail!("invalid value for `r`: must exceed 1");
            }
            Ok(Criterion::Uniform { r })
        }
        Some(other) => bail!("invalid value for `criterion`: expected `asymptotic` or `uniform`, found `{other}`"),
    }
}

fn classify(p: &Params) -> Result<Report> {
    let f = p.target()?;
    let psi = p.psi()?;
    let c = criterion(p)?;
    let g = series_exponents(c, &f, &psi)?;
    let verdict = classify_series(c, &f, &psi)?;
    let verdict_name = to_value(&verdict)?.as_str().unwrap_or_default().to_string();
    let mut summary = Table::new(&["f", "psi", "criterion", "power", "log_power", "verdict"]);
    let crit = match c {
        Criterion::Asymptotic => "asymptotic".to_string(),
        Criterion::Uniform { r } => format!("uniform r={r}"),
    };
    summary.push(vec![
        f.to_string(),
        psi.to_string(),
        crit,
        num(g.power),
        num(g.log_power),
        verdict_name,
    ]);
    Ok(Report {
        summary,
        records: vec![json!({ "f": f, "psi": psi, "criterion": c, "exponents": g, "verdict": verdict })],
        passed: None,
    })
}

fn grid_config(p: &Params) -> Result<LatticeGridConfig> {
    let n = p.dim()?;
    Ok(LatticeGridConfig {
        n,
        volumes: p.volumes.clone().ok_or_else(|| anyhow!("missing key `volumes`"))?,
        norm: p.ball_norm(n)?,
        affine: p.group()? == Group::Asl,
        samples: p.samples()?,
        master_seed: seed(p),
        sampler: p.sampler()?,
    })
}

fn records<T: Serialize>(items: &[T]) -> Result<Vec<Value>> {
    items.iter().map(to_value).collect()
}

fn siegel(p: &Params) -> Result<Report> {
    let cfg = grid_config(p)?;
    let (report, samples) = siegel_mean_experiment(&cfg)?;
    let mut summary = Table::new(&["volume", "class", "mean", "stderr", "reference", "z_score"]);
    for m in &report.means {
        summary.push(vec![
            num(m.volume),
            m.class.to_string(),
            num(m.summary.mean),
            num(m.summary.stderr),
            num(m.reference),
            format!("{:.3}", m.z_score),
        ]);
    }
    Ok(Report {
        summary,
        records: records(&samples)?,
        passed: None,
    })
}

fn rogers(p: &Params) -> Result<Report> {
    let cfg = grid_config(p)?;
    let class = p.point_class(PointClass::AllNonzero)?;
    let (points, samples) = rogers_variance_experiment(&cfg, class, p.ceiling)?;
    let mut summary = Table::new(&[
        "volume",
        "mean",
        "variance",
        "variance_over_volume",
        "stderr",
        "flagged",
    ]);
    for r in &points {
        summary.push(vec![
            num(r.volume),
            num(r.mean),
            num(r.variance),
            num(r.variance_over_volume),
            num(r.ratio_stderr),
            r.flagged.to_string(),
        ]);
    }
    Ok(Report {
        summary,
        records: records(&samples)?,
        passed: None,
    })
}

fn emptyprob(p: &Params) -> Result<Report> {
    let cfg = grid_config(p)?;
    let class = p.point_class(PointClass::AllNonzero)?;
    let (report, samples) = empty_probability_experiment(&cfg, class, p.r.unwrap_or(2.0))?;
    let mut summary = Table::new(&[
        "volume",
        "empty",
        "samples",
        "frequency",
        "wilson_low",
        "wilson_high",
        "slope",
    ]);
    for e in &report.points {
        summary.push(vec![
            num(e.volume),
            e.empty.to_string(),
            e.samples.to_string(),
            num(e.frequency),
            num(e.wilson_low),
            num(e.wilson_high),
            num(report.slope),
        ]);
    }
    Ok(Report {
        summary,
        records: records(&samples)?,
        passed: Some(report.decays),
    })
}

/// Experiment configuration; commands that ignore the schedule get a
/// one-point placeholder when none is given.
fn experiment_config(p: &Params, needs_schedule: bool) -> Result<ExperimentConfig> {
    let target = p.target()?;
    let n = target.dim();
    let schedule = match (&p.schedule, needs_schedule) {
        (None, false) => DyadicSchedule::powers_of_two(0, 0)?,
        _ => p.schedule()?,
    };
    Ok(ExperimentConfig {
        n,
        norm: p.norm(n)?,
        psi: p.psi()?,
        target,
        point_class: p.point_class(PointClass::AllNonzero)?,
        group: p.group()?,
        window: p.window()?,
        schedule,
        samples: p.samples()?,
        master_seed: seed(p),
        sampler: p.sampler()?,
    })
}

fn ratio(p: &Params) -> Result<Report> {
    let cfg = experiment_config(p, true)?;
    let samples = counting_ratio_experiment(&cfg)?;
    let mut summary = Table::new(&["sample", "threshold", "first_ratio", "final_ratio", "trend_ok"]);
    for s in &samples {
        summary.push(vec![
            s.sample.to_string(),
            num(s.threshold),
            opt(s.first_ratio),
            opt(s.final_ratio),
            s.trend_ok.to_string(),
        ]);
    }
    Ok(Report {
        summary,
        records: records(&samples)?,
        passed: None,
    })
}

fn zerofull(p: &Params) -> Result<Report> {
    let cfg = experiment_config(p, false)?;
    let t_split = Params::require(p.t_split, "t_split")?;
    let t_max = Params::require(p.t_max, "t_max")?;
    let (report, samples) = zero_full_experiment(&cfg, t_split, t_max)?;
    let mut summary = Table::new(&["regime", "t_split", "t_max", "hits", "samples", "fraction"]);
    summary.push(vec![
        to_value(&report.regime)?.as_str().unwrap_or_default().into(),
        num(t_split),
        num(t_max),
        report.hits.to_string(),
        report.samples.to_string(),
        num(report.fraction),
    ]);
    Ok(Report {
        summary,
        records: records(&samples)?,
        passed: None,
    })
}

fn uniform(p: &Params) -> Result<Report> {
    let cfg = experiment_config(p, true)?;
    let (report, samples) = uniform_approx_experiment(&cfg)?;
    let mut summary = Table::new(&["sample", "k_star", "asymptotic_witness", "regime"]);
    let regime: String = to_value(&report.regime)?.as_str().unwrap_or_default().into();
    for s in &samples {
        summary.push(vec![
            s.sample.to_string(),
            s.k_star.map(|k| k.to_string()).unwrap_or_default(),
            s.asymptotic_witness.to_string(),
            regime.clone(),
        ]);
    }
    Ok(Report {
        summary,
        records: records(&samples)?,
        passed: None,
    })
}

fn kgsystem(p: &Params) -> Result<Report> {
    let mut p = p.clone();
    if p.f.is_none() {
        let n = p.dim()?;
        p.f = Some(TargetFunction::linear_forms(p.psi()?.len(), n)?.to_string());
    }
    let p = &p;
    let cfg = experiment_config(p, true)?;
    let report = kg_system_experiment(&cfg)?;
    let regime: String = to_value(&report.regime)?.as_str().unwrap_or_default().into();
    let mut summary = Table::new(&["sample", "k", "t", "count", "regime"]);
    for s in &report.samples {
        for sh in &s.shells {
            summary.push(vec![
                s.sample.to_string(),
                sh.k.to_string(),
                num(sh.t),
                sh.count.to_string(),
                regime.clone(),
            ]);
        }
    }
    Ok(Report {
        summary,
        records: records(&report.samples)?,
        passed: None,
    })
}

fn normcheck(p: &Params) -> Result<Report> {
    let f = p.target()?;
    let n = f.dim();
    let psi = p.psi()?;
    let norms = [p.norm(n)?, p.norm2(n)?];
    let s = p.s.unwrap_or(1.0);
    let scales: Vec<(f64, f64)> = p.schedule()?.points().into_iter().map(|(_, t)| (s, t)).collect();
    let samples = p.mc_samples.unwrap_or(DEFAULT_MC_SAMPLES);
    let threshold = p.threshold.unwrap_or(1.0);
    let report = norm_independence_check(&f, &psi, [&norms[0], &norms[1]], &scales, samples, threshold, seed(p))?;
    let mut summary = Table::new(&["S", "T", "volume_1", "volume_2", "large_1", "large_2"]);
    let mut recs = Vec::new();
    for (i, pt) in report.points.iter().enumerate() {
        summary.push(vec![
            num(pt.s),
            num(pt.t),
            num(pt.volumes[0].value),
            num(pt.volumes[1].value),
            pt.large[0].to_string(),
            pt.large[1].to_string(),
        ]);
        let mut rec = to_value(pt)?;
        rec["master_seed"] = json!(seed(p));
        rec["sample"] = json!(i);
        recs.push(rec);
    }
    Ok(Report {
        summary,
        records: recs,
        passed: Some(report.agree),
    })
}

fn sandwich(p: &Params) -> Result<Report> {
    let cfg = experiment_config(p, false)?;
    if cfg.window.is_none() {
        bail!("missing key `op_norm_bound`");
    }
    let t = Params::require(p.t, "t")?;
    let delta = p.delta.unwrap_or(0.0);
    let js = p.inflations.clone().unwrap_or_else(|| vec![1.0, 2.0, 4.0, 8.0]);
    let report = window_sandwich_experiment(&cfg, t, delta, &js)?;
    let mut summary = Table::new(&["j", "volume", "bound", "fraction_within", "lower", "tightest_j"]);
    for row in &report.rows {
        summary.push(vec![
            num(row.j),
            num(row.volume),
            num(row.bound),
            num(row.fraction_within),
            num(report.lower),
            opt(report.tightest_j),
        ]);
    }
    Ok(Report {
        summary,
        records: records(&report.samples)?,
        passed: None,
    })
}

/// Small instances of the main checks, sized to finish in seconds.
fn selftest(p: &Params) -> Result<Report> {
    let s = seed(p);
    let mut summary = Table::new(&["check", "result", "detail"]);
    let mut records = Vec::new();
    let mut all = true;
    let mut record = |name: &str, ok: bool, detail: String| {
        all &= ok;
        summary.push(vec![
            name.into(),
            if ok { "PASS" } else { "FAIL" }.into(),
            detail.clone(),
        ]);
        records.push(json!({ "check": name, "passed": ok, "detail": detail }));
    };

    let checks = volume_cross_validation(&volume_test_matrix(), 100_000, s)?;
    let worst = checks.iter().map(|c| c.z_score.abs()).fold(0.0, f64::max);
    record(
        "volume closed forms vs Monte Carlo",
        worst < 4.5,
        format!("max |z| = {worst:.2}"),
    );

    let mut mismatches = 0;
    let queries = 12;
    for i in 0..queries {
        let (f, psi, norm) = match i % 3 {
            0 => ("spf:p=1,q=1,d=2", "pl:C=1,s=0.5,j=0", Norm::split(1, 1, 2.0)?),
            1 => ("prod:n=2", "pl:C=2,s=0.5,j=0", Norm::max(2)),
            _ => ("maxpow:a=1,n=2", "pl:C=1,s=0.5,j=0", Norm::max(2)),
        };
        let g = lattice_approx::haar::LatticeSampler::default().sample(2, &mut derive_rng(s, 100 + i), false)?;
        let space = if i % 2 == 0 {
            NormSpace::Source
        } else {
            NormSpace::Image
        };
        let q = CountQuery::new(
            g,
            f.parse()?,
            Bound::Psi(psi.parse()?),
            norm,
            PointClass::AllNonzero,
            1.0,
            12.0,
        )?
        .in_space(space);
        if count_solutions(&q)?.count != brute_force_count(&q)?.count {
            mismatches += 1;
        }
    }
    record(
        "enumeration vs brute force",
        mismatches == 0,
        format!("{mismatches} mismatches in {queries} queries"),
    );

    let cfg = LatticeGridConfig {
        n: 2,
        volumes: vec![20.0],
        norm: Norm::ld(2, 2.0)?,
        affine: false,
        samples: 400,
        master_seed: s,
        sampler: Default::default(),
    };
    let (report, _) = siegel_mean_experiment(&cfg)?;
    let m = report
        .get(20.0, PointClass::AllNonzero)
        .ok_or_else(|| anyhow!("missing Siegel mean"))?;
    record(
        "Siegel mean in dimension 2",
        m.z_score.abs() < 4.0,
        format!(
            "mean {:.3}, reference {:.3}, z {:.2}",
            m.summary.mean, m.reference, m.z_score
        ),
    );

    Ok(Report {
        summary,
        records,
        passed: Some(all),
    })
}
