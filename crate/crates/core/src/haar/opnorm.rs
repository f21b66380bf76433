use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::norm::{Exponent, Norm};
use crate::rng::rng_from_seed;

const SAMPLED_DIRECTIONS: usize = 256;
const ASCENT_STEPS: usize = 128;
const SAMPLING_SEED: u64 = 0x6f70_6e6f_726d;

/// Operator norm `sup ν(h·x) / ν(x)`.
///
/// `estimate` is a lower bound (exact when `exact` is set); `upper_bound` is
/// guaranteed to dominate the true value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatorNorm {
    pub estimate: f64,
    pub upper_bound: f64,
    pub exact: bool,
}

pub fn operator_norm(h: &DMatrix<f64>, norm: &Norm) -> OperatorNorm {
    let row_sum = max_row_sum(h);
    let single = norm.blocks().len() == 1;
    let exact = if norm.is_max_norm() {
        Some(row_sum)
    } else if single {
        match norm.blocks()[0].exponent {
            Exponent::Finite(d) if d == 1.0 => Some(max_col_sum(h)),
            Exponent::Finite(d) if d == 2.0 => Some(h.singular_values().max()),
            _ => None,
        }
    } else {
        None
    };
    if let Some(v) = exact {
        return OperatorNorm {
            estimate: v,
            upper_bound: v,
            exact: true,
        };
    }
    let upper_bound = norm.linf_equivalence() * row_sum;
    let estimate = sampled_estimate(h, norm).min(upper_bound);
    OperatorNorm {
        estimate,
        upper_bound,
        exact: false,
    }
}

fn max_row_sum(h: &DMatrix<f64>) -> f64 {
    h.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn max_col_sum(h: &DMatrix<f64>) -> f64 {
    h.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn ratio(h: &DMatrix<f64>, norm: &Norm, x: &[f64], buf: &mut [f64]) -> f64 {
    let n = x.len();
    for (i, b) in buf.iter_mut().enumerate() {
        *b = (0..n).map(|j| h[(i, j)] * x[j]).sum();
    }
    let denom = norm.value(x);
    if denom == 0.0 {
        0.0
    } else {
        norm.value(buf) / denom
    }
}

/// Coordinate vectors, sign patterns, random directions, then a shrinking
/// random-perturbation ascent from the best one found.
fn sampled_estimate(h: &DMatrix<f64>, norm: &Norm) -> f64 {
    let n = h.nrows();
    let mut rng = rng_from_seed(SAMPLING_SEED);
    let mut buf = vec![0.0; n];
    let mut best = 0.0f64;
    let mut best_x = vec![0.0; n];
    let consider = |x: &[f64], best: &mut f64, best_x: &mut Vec<f64>, buf: &mut [f64]| {
        let r = ratio(h, norm, x, buf);
        if r > *best {
            *best = r;
            best_x.copy_from_slice(x);
        }
    };
    let mut x = vec![0.0; n];
    for i in 0..n {
        x.fill(0.0);
        x[i] = 1.0;
        consider(&x, &mut best, &mut best_x, &mut buf);
    }
    if n <= 10 {
        for mask in 0u32..(1 << n) {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
            }
            consider(&x, &mut best, &mut best_x, &mut buf);
        }
    }
    for _ in 0..SAMPLED_DIRECTIONS {
        for xi in x.iter_mut() {
            *xi = rng.sample(StandardNormal);
        }
        consider(&x, &mut best, &mut best_x, &mut buf);
    }
    let mut step = 0.5;
    for _ in 0..ASCENT_STEPS {
        let scale = norm.value(&best_x);
        for (xi, bi) in x.iter_mut().zip(&best_x) {
            *xi = bi / scale + step * rng.sample::<f64, _>(StandardNormal);
        }
        let before = best;
        consider(&x, &mut best, &mut best_x, &mut buf);
        if best == before {
            step *= 0.9;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::NormBlock;

    fn m(rows: &[&[f64]]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), rows.len(), |i, j| rows[i][j])
    }

    #[test]
    fn max_norm_is_max_row_sum() {
        let h = m(&[&[2.0, 1.0], &[1.0, 1.0]]);
        let r = operator_norm(&h, &Norm::max(2));
        assert!(r.exact);
        assert_eq!(r.estimate, 3.0);
        assert_eq!(r.upper_bound, 3.0);
    }

    #[test]
    fn l1_and_l2_are_exact() {
        let h = m(&[&[1.0, -3.0], &[0.0, 1.0]]);
        assert_eq!(operator_norm(&h, &Norm::ld(2, 1.0).unwrap()).estimate, 4.0);
        let s = operator_norm(&h, &Norm::ld(2, 2.0).unwrap()).estimate;
        let expected = ((11.0 + (121.0f64 - 4.0).sqrt()) / 2.0).sqrt();
        assert!((s - expected).abs() < 1e-12);
    }

    #[test]
    fn identity_has_norm_one_everywhere() {
        let h = DMatrix::identity(4, 4);
        let mixed = Norm::from_blocks(vec![
            NormBlock {
                dim: 2,
                exponent: Exponent::Finite(3.0),
            },
            NormBlock {
                dim: 2,
                exponent: Exponent::Infinity,
            },
        ])
        .unwrap();
        let r = operator_norm(&h, &mixed);
        assert!(!r.exact);
        assert!((r.estimate - 1.0).abs() < 1e-12);
        assert!(r.upper_bound >= 1.0);
    }

    #[test]
    fn sampled_estimate_is_close_for_l3() {
        let h = m(&[&[1.0, 2.0], &[0.5, 1.5]]);
        let norm = Norm::ld(2, 3.0).unwrap();
        let r = operator_norm(&h, &norm);
        assert!(r.estimate <= r.upper_bound);
        let mut best = 0.0f64;
        for k in 0..200_000 {
            let a = k as f64 / 200_000.0 * std::f64::consts::TAU;
            let x = [a.cos(), a.sin()];
            let y = [h[(0, 0)] * x[0] + h[(0, 1)] * x[1], h[(1, 0)] * x[0] + h[(1, 1)] * x[1]];
            best = best.max(norm.value(&y) / norm.value(&x));
        }
        assert!((r.estimate - best).abs() < 1e-3 * best, "{} vs {best}", r.estimate);
    }

    #[test]
    fn diagonal_map_has_norm_of_largest_entry() {
        let h = m(&[&[2.0, 0.0], &[0.0, 0.5]]);
        for norm in [
            Norm::max(2),
            Norm::ld(2, 1.0).unwrap(),
            Norm::ld(2, 2.0).unwrap(),
            Norm::ld(2, 3.0).unwrap(),
        ] {
            let r = operator_norm(&h, &norm);
            assert!((r.estimate - 2.0).abs() < 1e-9, "{norm:?}: {r:?}");
            assert!(r.upper_bound >= 2.0 - 1e-12);
        }
    }

    #[test]
    fn max_norm_matches_the_cube_vertices() {
        // The sup of ‖h·x‖∞ over the unit cube is attained at a vertex.
        let mut rng = rng_from_seed(3);
        let h = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-2.0..2.0));
        let mut best = 0.0f64;
        for mask in 0..8u32 {
            let x = nalgebra::DVector::from_fn(3, |i, _| if mask >> i & 1 == 1 { -1.0 } else { 1.0 });
            let y = &h * x;
            best = best.max(y.amax());
        }
        let r = operator_norm(&h, &Norm::max(3));
        assert!(r.exact);
        assert!((r.estimate - best).abs() < 1e-12);
    }
}
