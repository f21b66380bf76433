//! Integer solutions of `|f(w0 + x·β)| ≤ ε` in a range of `x`.
//!
//! Every routine over-approximates: the returned integer intervals contain
//! all true solutions, and callers re-check candidates exactly.

use crate::target::{pow_abs, TargetFunction};

/// Relative slack absorbing rounding in the line evaluation.
const ROUNDING: f64 = 1e-12;
/// Outward expansion of real endpoints before rounding to integers.
const ENDPOINT: f64 = 1e-9;
/// Branch-and-bound ranges at most this long are emitted whole.
const LEAF: i64 = 2;

pub(crate) type Ranges = Vec<(i64, i64)>;

/// Candidate ranges for one scalar component.
pub(crate) fn solve_component(f: &TargetFunction, w0: &[f64], beta: &[f64], eps: f64, lo: i64, hi: i64) -> Ranges {
    if lo > hi {
        return Vec::new();
    }
    match f {
        TargetFunction::SignedPowerForm { p, d, .. } if *d == 2.0 => quadratic(*p, w0, beta, eps, lo, hi),
        TargetFunction::SignedPowerForm { p, d, .. } => {
            let (p, d) = (*p, *d);
            let enclosure = |a: f64, b: f64| {
                let (mut plus_lo, mut plus_hi, mut minus_lo, mut minus_hi) = (0.0, 0.0, 0.0, 0.0);
                for j in 0..w0.len() {
                    let (u, v) = (w0[j] + beta[j] * a, w0[j] + beta[j] * b);
                    let top = pow_abs(u.abs().max(v.abs()), d);
                    let bottom = if u.signum() != v.signum() || u == 0.0 || v == 0.0 {
                        0.0
                    } else {
                        pow_abs(u.abs().min(v.abs()), d)
                    };
                    if j < p {
                        plus_lo += bottom;
                        plus_hi += top;
                    } else {
                        minus_lo += bottom;
                        minus_hi += top;
                    }
                }
                (plus_lo - minus_hi, plus_hi - minus_lo, plus_hi + minus_hi)
            };
            branch_and_bound(&enclosure, eps, lo, hi)
        }
        TargetFunction::CoordinateProduct { .. } => {
            let enclosure = |a: f64, b: f64| {
                let (mut lo_v, mut hi_v, mut scale) = (1.0f64, 1.0f64, 1.0f64);
                for j in 0..w0.len() {
                    let (u, v) = (w0[j] + beta[j] * a, w0[j] + beta[j] * b);
                    let (fl, fh) = (u.min(v), u.max(v));
                    let c = [lo_v * fl, lo_v * fh, hi_v * fl, hi_v * fh];
                    lo_v = c.iter().copied().fold(f64::INFINITY, f64::min);
                    hi_v = c.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    scale *= fl.abs().max(fh.abs());
                }
                (lo_v, hi_v, scale)
            };
            branch_and_bound(&enclosure, eps, lo, hi)
        }
        TargetFunction::MaxPower { exponents, offset, .. } => {
            let mut out = vec![(lo, hi)];
            for (i, a) in exponents.iter().enumerate() {
                let c = offset + i;
                let radius = eps.powf(1.0 / a);
                let line = linear(w0[c], beta[c], radius, lo, hi);
                out = intersect(&out, &line);
                if out.is_empty() {
                    break;
                }
            }
            out
        }
        TargetFunction::VectorOf(_) => unreachable!("scalar component expected"),
    }
}

/// `|a + b·x| ≤ r`.
pub(crate) fn linear(a: f64, b: f64, r: f64, lo: i64, hi: i64) -> Ranges {
    let r = r * (1.0 + ROUNDING) + ROUNDING * a.abs().max(1.0);
    if b.abs() < f64::MIN_POSITIVE * 1e16 {
        return if a.abs() <= r { vec![(lo, hi)] } else { Vec::new() };
    }
    let (x1, x2) = ((-r - a) / b, (r - a) / b);
    real_to_integer(x1.min(x2), x1.max(x2), lo, hi)
}

fn real_to_integer(a: f64, b: f64, lo: i64, hi: i64) -> Ranges {
    let a = a - ENDPOINT * (1.0 + a.abs());
    let b = b + ENDPOINT * (1.0 + b.abs());
    if !(a <= b) || a > hi as f64 || b < lo as f64 {
        return Vec::new();
    }
    let first = (a.ceil() as i64).max(lo);
    let last = (b.floor() as i64).min(hi);
    if first <= last {
        vec![(first, last)]
    } else {
        Vec::new()
    }
}

/// `Σ_{j<p} (w0_j + β_j x)² − Σ_{j≥p} (w0_j + β_j x)² = A x² + B x + C`,
/// split at the vertex into monotone pieces and searched over integers.
fn quadratic(p: usize, w0: &[f64], beta: &[f64], eps: f64, lo: i64, hi: i64) -> Ranges {
    let (mut a2, mut b1, mut c0) = (0.0, 0.0, 0.0);
    let reach = (lo.unsigned_abs().max(hi.unsigned_abs())) as f64;
    let mut scale = 0.0;
    for j in 0..w0.len() {
        let sign = if j < p { 1.0 } else { -1.0 };
        a2 += sign * beta[j] * beta[j];
        b1 += sign * 2.0 * w0[j] * beta[j];
        c0 += sign * w0[j] * w0[j];
        let m = w0[j].abs() + beta[j].abs() * reach;
        scale += m * m;
    }
    let band = eps * (1.0 + ROUNDING) + ROUNDING * scale;
    let value = |x: i64| {
        let x = x as f64;
        (a2 * x + b1) * x + c0
    };
    let mut out = Vec::new();
    if a2 == 0.0 {
        monotone_piece(&value, b1 >= 0.0, band, lo, hi, &mut out);
        return out;
    }
    let vertex = -b1 / (2.0 * a2);
    let split = vertex.floor().clamp(lo as f64 - 1.0, hi as f64) as i64;
    // Left of the vertex the parabola decreases when it opens upward.
    monotone_piece(&value, a2 < 0.0, band, lo, split, &mut out);
    monotone_piece(&value, a2 > 0.0, band, split + 1, hi, &mut out);
    merge(out)
}

/// Integers in `[lo, hi]` where a monotone `value` lies in `[−band, band]`.
fn monotone_piece<F: Fn(i64) -> f64>(value: &F, increasing: bool, band: f64, lo: i64, hi: i64, out: &mut Ranges) {
    if lo > hi {
        return;
    }
    let (first, last) = if increasing {
        (
            first_true(lo, hi, |x| value(x) >= -band),
            last_true(lo, hi, |x| value(x) <= band),
        )
    } else {
        (
            first_true(lo, hi, |x| value(x) <= band),
            last_true(lo, hi, |x| value(x) >= -band),
        )
    };
    if let (Some(a), Some(b)) = (first, last) {
        if a <= b {
            out.push((a, b));
        }
    }
}

/// Smallest `x` in `[lo, hi]` with `pred(x)` for a predicate that switches
/// from false to true once.
fn first_true(lo: i64, hi: i64, pred: impl Fn(i64) -> bool) -> Option<i64> {
    if !pred(hi) {
        return None;
    }
    if pred(lo) {
        return Some(lo);
    }
    let (mut bad, mut good) = (lo, hi);
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        if pred(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Some(good)
}

/// Largest `x` in `[lo, hi]` with `pred(x)` for a predicate that switches
/// from true to false once.
fn last_true(lo: i64, hi: i64, pred: impl Fn(i64) -> bool) -> Option<i64> {
    if !pred(lo) {
        return None;
    }
    if pred(hi) {
        return Some(hi);
    }
    let (mut good, mut bad) = (lo, hi);
    while bad - good > 1 {
        let mid = good + (bad - good) / 2;
        if pred(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    Some(good)
}

/// Bisects the integer range, discarding pieces whose enclosure
/// `(min, max, magnitude)` misses `[−ε, ε]`.
fn branch_and_bound<E: Fn(f64, f64) -> (f64, f64, f64)>(enclosure: &E, eps: f64, lo: i64, hi: i64) -> Ranges {
    let mut out = Vec::new();
    let mut stack = vec![(lo, hi)];
    while let Some((a, b)) = stack.pop() {
        let (min, max, scale) = enclosure(a as f64, b as f64);
        let band = eps * (1.0 + ROUNDING) + ROUNDING * scale;
        if max < -band || min > band {
            continue;
        }
        if b - a <= LEAF || (min >= -band && max <= band) {
            out.push((a, b));
            continue;
        }
        let mid = a + (b - a) / 2;
        stack.push((mid + 1, b));
        stack.push((a, mid));
    }
    merge(out)
}

fn merge(mut ranges: Ranges) -> Ranges {
    ranges.sort_unstable();
    let mut out: Ranges = Vec::with_capacity(ranges.len());
    for (a, b) in ranges {
        match out.last_mut() {
            Some(last) if a <= last.1 + 1 => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Intersection of two sorted disjoint range lists.
pub(crate) fn intersect(a: &[(i64, i64)], b: &[(i64, i64)]) -> Ranges {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        let lo = a[i].0.max(b[j].0);
        let hi = a[i].1.min(b[j].1);
        if lo <= hi {
            out.push((lo, hi));
        }
        if a[i].1 < b[j].1 {
            i += 1;
        } else {
            j += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::target::eval_scalar;
    use proptest::prelude::*;

    fn covered(ranges: &Ranges, x: i64) -> bool {
        ranges.iter().any(|(a, b)| *a <= x && x <= *b)
    }

    fn check(f: &TargetFunction, w0: &[f64], beta: &[f64], eps: f64, lo: i64, hi: i64) {
        let ranges = solve_component(f, w0, beta, eps, lo, hi);
        for x in lo..=hi {
            let w: Vec<f64> = w0.iter().zip(beta).map(|(a, b)| a + b * x as f64).collect();
            if eval_scalar(f, &w).abs() <= eps {
                assert!(covered(&ranges, x), "{f:?} missed x = {x} in {ranges:?}");
            }
        }
        for (a, b) in &ranges {
            assert!(lo <= *a && a <= b && *b <= hi);
        }
    }

    #[test]
    fn diagonal_quadratic() {
        // x² − 3² ∈ [−0.5, 0.5] only at x = ±3.
        let f = TargetFunction::signed_power(1, 1, 2.0).unwrap();
        let r = solve_component(&f, &[0.0, 3.0], &[1.0, 0.0], 0.5, -10, 10);
        assert_eq!(r, vec![(-3, -3), (3, 3)]);
    }

    #[test]
    fn tangent_quadratic_keeps_the_touching_point() {
        // (x − 2)² − 0 touches zero at x = 2 with ε = 0.
        let f = TargetFunction::signed_power(1, 1, 2.0).unwrap();
        let r = solve_component(&f, &[-2.0, 0.0], &[1.0, 0.0], 0.0, -10, 10);
        assert!(covered(&r, 2));
    }

    #[test]
    fn max_power_is_linear() {
        let f = TargetFunction::max_power(vec![1.0], 2).unwrap();
        let r = solve_component(&f, &[0.25, 0.0], &[1.0, 1.0], 0.5, -4, 4);
        assert_eq!(r, vec![(0, 0)]);
    }

    #[test]
    fn product_with_zero_bound_finds_roots() {
        let f = TargetFunction::product(3).unwrap();
        let r = solve_component(&f, &[2.0, 1.0, -3.0], &[1.0, 0.0, 1.0], 0.0, -20, 20);
        assert!(covered(&r, -2) && covered(&r, 3));
        assert!(r.iter().map(|(a, b)| b - a + 1).sum::<i64>() <= 8);
    }

    #[test]
    fn intersection() {
        assert_eq!(
            intersect(&[(0, 5), (8, 12)], &[(3, 9), (11, 20)]),
            vec![(3, 5), (8, 9), (11, 12)]
        );
        assert_eq!(intersect(&[(0, 1)], &[(2, 3)]), vec![]);
    }

    fn family() -> impl Strategy<Value = TargetFunction> {
        prop_oneof![
            (
                1usize..3,
                1usize..3,
                prop_oneof![Just(1.0), Just(1.5), Just(2.0), Just(3.0), Just(4.0)]
            )
                .prop_map(|(p, q, d)| TargetFunction::signed_power(p, q, d).unwrap()),
            (2usize..5).prop_map(|n| TargetFunction::product(n).unwrap()),
            (prop::collection::vec(0.5f64..3.0, 1..3)).prop_map(|a| {
                let n = a.len() + 1;
                TargetFunction::max_power(a, n).unwrap()
            }),
        ]
    }

    proptest! {
        #[test]
        fn never_misses_a_solution(
            f in family(),
            seed in prop::collection::vec((-20.0f64..20.0, -3.0f64..3.0), 5),
            eps in prop_oneof![Just(0.0), 0.0f64..50.0],
            lo in -40i64..0,
            len in 0i64..80,
        ) {
            let n = f.dim();
            let w0: Vec<f64> = seed.iter().take(n).map(|s| s.0).collect();
            let beta: Vec<f64> = seed.iter().take(n).map(|s| s.1).collect();
            check(&f, &w0, &beta, eps, lo, lo + len);
        }

        #[test]
        fn integer_lines_hit_exact_zeros(
            f in family(),
            seed in prop::collection::vec((-6i64..6, -2i64..3), 5),
            lo in -30i64..0,
        ) {
            let n = f.dim();
            let w0: Vec<f64> = seed.iter().take(n).map(|s| s.0 as f64).collect();
            let beta: Vec<f64> = seed.iter().take(n).map(|s| s.1 as f64).collect();
            check(&f, &w0, &beta, 0.0, lo, lo + 60);
            check(&f, &w0, &beta, 1.0, lo, lo + 60);
        }
    }
}
