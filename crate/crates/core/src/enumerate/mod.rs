//! Exact counting of integer points `v` in a point class with
//! `T0 < ν(v) ≤ T` and `|f(g·v)| ≼ bound(ν(v))`.
//!
//! All coordinates but one are enumerated; the remaining one enters
//! `w = h·v + z` affinely, so each prefix leaves a one-dimensional problem
//! solved by the routines in `solve`. Candidates are always re-checked
//! against the exact predicate.

mod region;
mod solve;

use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::haar::UnimodularMap;
use crate::norm::{Exponent, Norm};
use crate::order::abs_leq;
use crate::points::PointClass;
use crate::psi::ApproxFunction;
use crate::target::{pow_abs, TargetFunction};

pub use region::{count_points_by_class, lattice_points_in_region, ClassCounts};

use region::{l2_domination, Pohst};
use solve::{intersect, linear, solve_component, Ranges};

/// Largest box the brute-force oracle will scan.
pub const BRUTE_FORCE_GUARD: f64 = 1e9;
const DEGENERATE: f64 = 1e-12;
const BOX_SLACK: f64 = 1e-12;

/// Right-hand side of the approximation inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    /// `ψ(ν(v))`.
    Psi(ApproxFunction),
    /// A fixed vector `ε`.
    Fixed(Vec<f64>),
}

impl Bound {
    fn outputs(&self) -> usize {
        match self {
            Bound::Psi(psi) => psi.len(),
            Bound::Fixed(eps) => eps.len(),
        }
    }

    fn eval_into(&self, r: f64, out: &mut [f64]) {
        match self {
            Bound::Psi(psi) => psi.eval_into(r, out),
            Bound::Fixed(eps) => out.copy_from_slice(eps),
        }
    }

    /// Componentwise upper bound on `bound(r)` for `r ∈ (t0, t]`; each ψ
    /// component is monotone beyond a plateau, so the ends suffice.
    fn coarse(&self, t0: f64, t: f64) -> Vec<f64> {
        match self {
            Bound::Psi(psi) => {
                let lo = psi.eval(t0);
                let hi = psi.eval(t);
                lo.iter().zip(&hi).map(|(a, b)| a.max(*b)).collect()
            }
            Bound::Fixed(eps) => eps.clone(),
        }
    }
}

/// Whether the shell condition is imposed on `v` or on `w = g·v`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSpace {
    /// `T0 < ν(v) ≤ T`.
    #[default]
    Source,
    /// `T0 < ν(g·v) ≤ T`, the form used for lattice point counts.
    Image,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountQuery {
    pub map: UnimodularMap,
    pub target: TargetFunction,
    pub bound: Bound,
    pub norm: Norm,
    pub point_class: PointClass,
    pub t0: f64,
    pub t: f64,
    #[serde(default)]
    pub norm_space: NormSpace,
    /// Stop after the first witness.
    #[serde(default)]
    pub stop_at_first: bool,
}

impl CountQuery {
    pub fn new(
        map: UnimodularMap,
        target: TargetFunction,
        bound: Bound,
        norm: Norm,
        point_class: PointClass,
        t0: f64,
        t: f64,
    ) -> Result<Self> {
        let q = CountQuery {
            map,
            target,
            bound,
            norm,
            point_class,
            t0,
            t,
            norm_space: NormSpace::Source,
            stop_at_first: false,
        };
        q.validate()?;
        Ok(q)
    }

    pub fn in_space(mut self, space: NormSpace) -> Self {
        self.norm_space = space;
        self
    }

    pub fn first_witness_only(mut self) -> Self {
        self.stop_at_first = true;
        self
    }

    pub fn with_shell(mut self, t0: f64, t: f64) -> Result<Self> {
        self.t0 = t0;
        self.t = t;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.map.dim();
        check_dim(n, self.target.dim())?;
        check_dim(n, self.norm.dim())?;
        self.target.validate()?;
        check_dim(self.target.outputs(), self.bound.outputs())?;
        if let Bound::Fixed(eps) = &self.bound {
            if eps.iter().any(|e| !e.is_finite() || *e < 0.0) {
                return Err(Error::invalid("epsilon", "entries must be finite and nonnegative"));
            }
        }
        if !(self.t0 >= 0.0) || !self.t0.is_finite() {
            return Err(Error::invalid("t0", "must be finite and nonnegative"));
        }
        if !(self.t >= self.t0) || !self.t.is_finite() {
            return Err(Error::invalid("t", "must be finite and at least t0"));
        }
        Ok(())
    }

    /// Exact membership test for a single integer vector.
    pub fn accepts(&self, v: &[i64]) -> Result<bool> {
        check_dim(self.map.dim(), v.len())?;
        Ok(Scratch::new(self).accepts(self, v))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountResult {
    pub count: u64,
    pub first_witness: Option<Vec<i64>>,
    /// Enumeration nodes visited, or points scanned by the oracle.
    pub visited: u64,
    /// Set when some prefix fell back to scanning the last coordinate.
    pub fallback_scan: bool,
}

impl CountResult {
    fn absorb(&mut self, other: CountResult) {
        self.count += other.count;
        self.visited += other.visited;
        self.fallback_scan |= other.fallback_scan;
        if self.first_witness.is_none() {
            self.first_witness = other.first_witness;
        }
    }
}

/// Buffers for the exact predicate.
struct Scratch {
    vf: Vec<f64>,
    w: Vec<f64>,
    fx: Vec<f64>,
    bx: Vec<f64>,
}

impl Scratch {
    fn new(q: &CountQuery) -> Self {
        let n = q.map.dim();
        let l = q.target.outputs();
        Scratch {
            vf: vec![0.0; n],
            w: vec![0.0; n],
            fx: vec![0.0; l],
            bx: vec![0.0; l],
        }
    }

    fn accepts(&mut self, q: &CountQuery, v: &[i64]) -> bool {
        if !q.point_class.contains(v) {
            return false;
        }
        for (a, b) in self.vf.iter_mut().zip(v) {
            *a = *b as f64;
        }
        q.map.apply_into(&self.vf, &mut self.w);
        let r = match q.norm_space {
            NormSpace::Source => q.norm.value(&self.vf),
            NormSpace::Image => q.norm.value(&self.w),
        };
        if !(r > q.t0 && r <= q.t) {
            return false;
        }
        q.target.eval_into(&self.w, &mut self.fx);
        q.bound.eval_into(r, &mut self.bx);
        abs_leq(&self.fx, &self.bx)
    }
}

type Sink<'s> = dyn FnMut(&[i64], &[f64]) -> ControlFlow<()> + 's;

/// Per-query data shared by every worker.
struct Plan<'q> {
    q: &'q CountQuery,
    n: usize,
    k: usize,
    eps: Vec<f64>,
    beta: Vec<f64>,
    degenerate: bool,
    /// Source mode: coordinates other than `k`, outermost first.
    outer: Vec<usize>,
    block: Vec<usize>,
    exponents: Vec<Exponent>,
    /// Image mode.
    pohst: Option<(Pohst, f64)>,
}

/// Column of `h` with the largest ℓ² norm; this coordinate is solved for.
pub fn elimination_coordinate(map: &UnimodularMap) -> usize {
    let h = map.matrix();
    (0..map.dim())
        .map(|j| (j, h.column(j).norm_squared()))
        .fold((0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best })
        .0
}

impl<'q> Plan<'q> {
    fn new(q: &'q CountQuery) -> Self {
        let n = q.map.dim();
        let k = elimination_coordinate(&q.map);
        let beta: Vec<f64> = q.map.matrix().column(k).iter().copied().collect();
        let degenerate = beta.iter().all(|b| b.abs() < DEGENERATE);
        let mut block = Vec::with_capacity(n);
        for (b, nb) in q.norm.blocks().iter().enumerate() {
            block.extend(std::iter::repeat_n(b, nb.dim));
        }
        let exponents = q.norm.blocks().iter().map(|b| b.exponent).collect();
        let pohst = match q.norm_space {
            NormSpace::Source => None,
            NormSpace::Image => {
                let mut order = vec![k];
                order.extend((0..n).filter(|&j| j != k));
                Some((Pohst::new(&q.map, order), l2_domination(&q.norm) * q.t))
            }
        };
        Plan {
            q,
            n,
            k,
            eps: q.bound.coarse(q.t0, q.t),
            beta,
            degenerate,
            outer: (0..n).filter(|&j| j != k).collect(),
            block,
            exponents,
            pohst,
        }
    }

    /// Largest `|x|` still allowed for a coordinate of block `b`.
    fn radius(&self, b: usize, acc: &[f64]) -> i64 {
        let t = self.q.t * (1.0 + BOX_SLACK);
        match self.exponents[b] {
            Exponent::Infinity => t.floor() as i64,
            Exponent::Finite(d) => {
                let rem = t.powf(d) - acc[b];
                if rem < 0.0 {
                    -1
                } else {
                    (rem.powf(1.0 / d) * (1.0 + BOX_SLACK) + BOX_SLACK).floor() as i64
                }
            }
        }
    }

    fn top_range(&self) -> Option<(i64, i64)> {
        match &self.pohst {
            Some((p, radius)) => p.top_range(*radius),
            None => {
                let acc = vec![0.0; self.exponents.len()];
                let r = self.radius(self.block[self.outer[0]], &acc);
                (r >= 0).then_some((-r, r))
            }
        }
    }

    /// Runs the enumeration, optionally with the outermost coordinate pinned.
    fn run(&self, top: Option<i64>, sink: &mut Sink<'_>) -> CountResult {
        let mut worker = Worker::new(self);
        if self.n == 1 {
            let mut v = vec![0i64; 1];
            let (lo, hi) = match &self.pohst {
                Some((p, radius)) => match p.top_range(*radius) {
                    Some(r) => r,
                    None => return worker.result,
                },
                None => {
                    let r = self.radius(0, &[0.0]);
                    (-r, r)
                }
            };
            let _ = worker.leaf(&mut v, lo, hi, sink);
            return worker.result;
        }
        match &self.pohst {
            Some((p, radius)) => {
                let _ = p.enumerate(*radius, top, &mut |outer: &[i64], lo, hi| {
                    let mut v = outer.to_vec();
                    worker.leaf(&mut v, lo, hi, sink)
                });
            }
            None => {
                let mut v = vec![0i64; self.n];
                let mut acc = vec![0.0; self.exponents.len()];
                let _ = self.dfs(0, top, &mut v, &mut acc, &mut worker, sink);
            }
        }
        worker.result
    }

    fn dfs(
        &self,
        depth: usize,
        top: Option<i64>,
        v: &mut [i64],
        acc: &mut [f64],
        worker: &mut Worker<'_, '_>,
        sink: &mut Sink<'_>,
    ) -> ControlFlow<()> {
        if depth == self.outer.len() {
            let r = self.radius(self.block[self.k], acc);
            return worker.leaf(v, -r, r, sink);
        }
        let i = self.outer[depth];
        let b = self.block[i];
        let r = self.radius(b, acc);
        let (lo, hi) = match top {
            Some(x) if depth == 0 => (x.max(-r), x.min(r)),
            _ => (-r, r),
        };
        for x in lo..=hi {
            v[i] = x;
            worker.result.visited += 1;
            let saved = acc[b];
            if let Exponent::Finite(d) = self.exponents[b] {
                acc[b] += pow_abs(x as f64, d);
            }
            let flow = self.dfs(depth + 1, None, v, acc, worker, sink);
            acc[b] = saved;
            flow?;
        }
        v[i] = 0;
        ControlFlow::Continue(())
    }

    /// Candidate ranges for coordinate `k` given the others in `v`.
    fn candidates(&self, v: &[i64], w0: &mut [f64], lo: i64, hi: i64) -> (Ranges, bool) {
        let h = self.q.map.matrix();
        let z = self.q.map.translation();
        for (r, w) in w0.iter_mut().enumerate() {
            let mut s = z[r];
            for (j, vj) in v.iter().enumerate() {
                if j != self.k {
                    s += h[(r, j)] * *vj as f64;
                }
            }
            *w = s;
        }
        let mut ranges = vec![(lo, hi)];
        if self.pohst.is_some() {
            for (a, b) in w0.iter().zip(&self.beta) {
                ranges = intersect(&ranges, &linear(*a, *b, self.q.t, lo, hi));
                if ranges.is_empty() {
                    return (ranges, false);
                }
            }
        }
        if self.degenerate {
            return (ranges, true);
        }
        for (c, eps) in self.q.target.components().iter().zip(&self.eps) {
            ranges = intersect(&ranges, &solve_component(c, w0, &self.beta, *eps, lo, hi));
            if ranges.is_empty() {
                break;
            }
        }
        (ranges, false)
    }
}

struct Worker<'p, 'q> {
    plan: &'p Plan<'q>,
    scratch: Scratch,
    w0: Vec<f64>,
    result: CountResult,
}

impl<'p, 'q> Worker<'p, 'q> {
    fn new(plan: &'p Plan<'q>) -> Self {
        Worker {
            plan,
            scratch: Scratch::new(plan.q),
            w0: vec![0.0; plan.n],
            result: CountResult::default(),
        }
    }

    fn leaf(&mut self, v: &mut [i64], lo: i64, hi: i64, sink: &mut Sink<'_>) -> ControlFlow<()> {
        self.result.visited += 1;
        if lo > hi {
            return ControlFlow::Continue(());
        }
        let plan = self.plan;
        let (ranges, fallback) = plan.candidates(v, &mut self.w0, lo, hi);
        self.result.fallback_scan |= fallback;
        for (a, b) in ranges {
            for x in a..=b {
                v[plan.k] = x;
                if self.scratch.accepts(plan.q, v) {
                    self.result.count += 1;
                    if self.result.first_witness.is_none() {
                        self.result.first_witness = Some(v.to_vec());
                    }
                    sink(v, &self.scratch.w)?;
                }
            }
        }
        v[plan.k] = 0;
        ControlFlow::Continue(())
    }
}

/// Counts the solutions of the query, in parallel over the outermost
/// coordinate unless only the first witness is wanted.
pub fn count_solutions(q: &CountQuery) -> Result<CountResult> {
    q.validate()?;
    if q.t <= q.t0 {
        return Ok(CountResult::default());
    }
    let plan = Plan::new(q);
    if q.stop_at_first || plan.n == 1 {
        let stop = q.stop_at_first;
        return Ok(plan.run(None, &mut |_, _| {
            if stop {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        }));
    }
    let Some((lo, hi)) = plan.top_range() else {
        return Ok(CountResult::default());
    };
    let parts: Vec<CountResult> = (lo..=hi)
        .into_par_iter()
        .map(|x| plan.run(Some(x), &mut |_, _| ControlFlow::Continue(())))
        .collect();
    let mut total = CountResult::default();
    for p in parts {
        total.absorb(p);
    }
    Ok(total)
}

/// Streams every solution as `(v, g·v)`; the callback may stop early.
pub fn for_each_solution<F>(q: &CountQuery, mut visit: F) -> Result<CountResult>
where
    F: FnMut(&[i64], &[f64]) -> ControlFlow<()>,
{
    q.validate()?;
    if q.t <= q.t0 {
        return Ok(CountResult::default());
    }
    let plan = Plan::new(q);
    Ok(plan.run(None, &mut visit))
}

/// Candidate ranges for the eliminated coordinate given the other
/// coordinates of `v`, over `|v_k| ≤ reach`.
pub fn candidate_intervals(q: &CountQuery, v: &[i64], reach: i64) -> Result<Vec<(i64, i64)>> {
    q.validate()?;
    check_dim(q.map.dim(), v.len())?;
    let plan = Plan::new(q);
    let mut w0 = vec![0.0; plan.n];
    Ok(plan.candidates(v, &mut w0, -reach, reach).0)
}

/// Half-widths of the integer box the oracle scans.
fn scan_box(q: &CountQuery) -> Vec<i64> {
    let n = q.map.dim();
    match q.norm_space {
        NormSpace::Source => vec![q.t.floor() as i64; n],
        NormSpace::Image => {
            let inv = q.map.inverse();
            let (hinv, z) = (inv.matrix(), q.map.translation());
            (0..n)
                .map(|i| {
                    let s: f64 = (0..n).map(|j| hinv[(i, j)].abs() * (q.t + z[j].abs())).sum();
                    s.floor() as i64 + 1
                })
                .collect()
        }
    }
}

/// Full scan of the bounding integer box with the exact predicate.
pub fn brute_force_count(q: &CountQuery) -> Result<CountResult> {
    q.validate()?;
    let mut result = CountResult::default();
    if q.t <= q.t0 {
        return Ok(result);
    }
    let half = scan_box(q);
    let points: f64 = half.iter().map(|h| (2 * h + 1) as f64).product();
    if points > BRUTE_FORCE_GUARD {
        return Err(Error::BoxTooLarge {
            points,
            guard: BRUTE_FORCE_GUARD,
        });
    }
    let mut scratch = Scratch::new(q);
    let mut v: Vec<i64> = half.iter().map(|h| -h).collect();
    loop {
        result.visited += 1;
        if scratch.accepts(q, &v) {
            result.count += 1;
            if result.first_witness.is_none() {
                result.first_witness = Some(v.clone());
                if q.stop_at_first {
                    return Ok(result);
                }
            }
        }
        let mut i = 0;
        while i < v.len() {
            if v[i] < half[i] {
                v[i] += 1;
                break;
            }
            v[i] = -half[i];
            i += 1;
        }
        if i == v.len() {
            break;
        }
    }
    Ok(result)
}
