//! Fincke–Pohst enumeration of `{v ∈ ℤ^n : ‖h·v + z‖₂ ≤ R}`.

use std::ops::ControlFlow;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::haar::UnimodularMap;
use crate::norm::{Exponent, Norm};
use crate::points::is_primitive;

const RADIUS_SLACK: f64 = 1e-9;

/// Triangular form of `h·P` for a column order `P`; the coordinate
/// `order[0]` is the innermost level.
pub(crate) struct Pohst {
    n: usize,
    order: Vec<usize>,
    r: DMatrix<f64>,
    c: DVector<f64>,
}

impl Pohst {
    pub(crate) fn new(g: &UnimodularMap, order: Vec<usize>) -> Self {
        let n = g.dim();
        let h = g.matrix();
        let permuted = DMatrix::from_fn(n, n, |i, j| h[(i, order[j])]);
        let qr = permuted.qr();
        let c = qr.q().transpose() * g.translation();
        Pohst { n, order, r: qr.r(), c }
    }

    /// Calls `leaf(v, lo, hi)` for every outer assignment, where `v` holds
    /// the outer coordinates (the innermost one is left at 0) and
    /// `[lo, hi]` is the innermost coordinate's admissible range. With
    /// `top` set, the outermost coordinate is pinned to that value.
    pub(crate) fn enumerate<F>(&self, radius: f64, top: Option<i64>, leaf: &mut F) -> ControlFlow<()>
    where
        F: FnMut(&[i64], i64, i64) -> ControlFlow<()>,
    {
        let mut u = vec![0i64; self.n];
        let mut v = vec![0i64; self.n];
        self.level(self.n - 1, radius * radius, top, &mut u, &mut v, leaf)
    }

    /// Range of the outermost coordinate.
    pub(crate) fn top_range(&self, radius: f64) -> Option<(i64, i64)> {
        self.range(self.n - 1, radius * radius, &[])
    }

    fn range(&self, i: usize, rem: f64, u: &[i64]) -> Option<(i64, i64)> {
        let mut y = self.c[i];
        for j in i + 1..self.n {
            y += self.r[(i, j)] * u[j] as f64;
        }
        let rii = self.r[(i, i)];
        let center = -y / rii;
        let half = rem.max(0.0).sqrt() / rii.abs();
        let slack = RADIUS_SLACK * (1.0 + center.abs() + half);
        let lo = (center - half - slack).ceil();
        let hi = (center + half + slack).floor();
        (lo <= hi).then_some((lo as i64, hi as i64))
    }

    fn level<F>(
        &self,
        i: usize,
        rem: f64,
        top: Option<i64>,
        u: &mut [i64],
        v: &mut [i64],
        leaf: &mut F,
    ) -> ControlFlow<()>
    where
        F: FnMut(&[i64], i64, i64) -> ControlFlow<()>,
    {
        let Some((mut lo, mut hi)) = self.range(i, rem, u) else {
            return ControlFlow::Continue(());
        };
        if i == 0 {
            v[self.order[0]] = 0;
            return leaf(v, lo, hi);
        }
        if let (true, Some(x)) = (i == self.n - 1, top) {
            if x < lo || x > hi {
                return ControlFlow::Continue(());
            }
            (lo, hi) = (x, x);
        }
        let mut y = self.c[i];
        for j in i + 1..self.n {
            y += self.r[(i, j)] * u[j] as f64;
        }
        let rii = self.r[(i, i)];
        for x in lo..=hi {
            u[i] = x;
            v[self.order[i]] = x;
            let e = rii * x as f64 + y;
            self.level(i - 1, rem - e * e, None, u, v, leaf)?;
        }
        u[i] = 0;
        v[self.order[i]] = 0;
        ControlFlow::Continue(())
    }
}

/// Smallest `c` with `‖x‖₂ ≤ c·ν(x)`.
pub(crate) fn l2_domination(norm: &Norm) -> f64 {
    norm.blocks()
        .iter()
        .map(|b| {
            let k = b.dim as f64;
            match b.exponent {
                Exponent::Infinity => k,
                Exponent::Finite(d) if d <= 2.0 => 1.0,
                Exponent::Finite(d) => k.powf(1.0 - 2.0 / d),
            }
        })
        .sum::<f64>()
        .sqrt()
}

/// Visits every `v ∈ ℤ^n` with `ν(g·v) ≤ radius`, passing `(v, g·v)`.
pub fn lattice_points_in_region<F>(g: &UnimodularMap, norm: &Norm, radius: f64, mut visit: F) -> Result<u64>
where
    F: FnMut(&[i64], &[f64]),
{
    check_dim(g.dim(), norm.dim())?;
    if !radius.is_finite() {
        return Err(Error::invalid("radius", "the region must be bounded"));
    }
    if radius < 0.0 {
        return Ok(0);
    }
    let n = g.dim();
    let pohst = Pohst::new(g, (0..n).collect());
    let mut v = vec![0i64; n];
    let mut vf = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut found = 0u64;
    let _ = pohst.enumerate(l2_domination(norm) * radius, None, &mut |outer, lo, hi| {
        v.copy_from_slice(outer);
        for x in lo..=hi {
            v[0] = x;
            for (a, b) in vf.iter_mut().zip(v.iter()) {
                *a = *b as f64;
            }
            g.apply_into(&vf, &mut w);
            if norm.value(&w) <= radius {
                found += 1;
                visit(&v, &w);
            }
        }
        ControlFlow::Continue(())
    });
    Ok(found)
}

/// Point counts of `g·ℤ^n ∩ {ν ≤ radius}` by class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub all: u64,
    pub nonzero: u64,
    pub primitive: u64,
}

pub fn count_points_by_class(g: &UnimodularMap, norm: &Norm, radius: f64) -> Result<ClassCounts> {
    let mut counts = ClassCounts::default();
    lattice_points_in_region(g, norm, radius, |v, _| {
        counts.all += 1;
        if v.iter().any(|x| *x != 0) {
            counts.nonzero += 1;
            if is_primitive(v) {
                counts.primitive += 1;
            }
        }
    })?;
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::{sample_affine_lattice, sample_lattice, sample_sl};
    use crate::rng::rng_from_seed;

    #[test]
    fn identity_box() {
        for n in 2..=4 {
            let g = UnimodularMap::identity(n);
            let c = count_points_by_class(&g, &Norm::max(n), 2.5).unwrap();
            assert_eq!(c.all, 5u64.pow(n as u32));
            assert_eq!(c.nonzero, c.all - 1);
        }
    }

    #[test]
    fn identity_disc() {
        let g = UnimodularMap::identity(2);
        let c = count_points_by_class(&g, &Norm::ld(2, 2.0).unwrap(), 5.0).unwrap();
        // Gauss circle problem, r = 5.
        assert_eq!(c.all, 81);
    }

    fn brute(g: &UnimodularMap, norm: &Norm, radius: f64, reach: i64) -> u64 {
        let n = g.dim();
        let mut count = 0;
        let mut v = vec![0i64; n];
        let total = (2 * reach + 1).pow(n as u32);
        for mut idx in 0..total {
            for x in v.iter_mut() {
                *x = idx % (2 * reach + 1) - reach;
                idx /= 2 * reach + 1;
            }
            let vf: Vec<f64> = v.iter().map(|x| *x as f64).collect();
            if norm.value(&g.apply(&vf).unwrap()) <= radius {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn matches_brute_force_for_several_norms() {
        let mut rng = rng_from_seed(3);
        for trial in 0..20 {
            let n = 2 + trial % 2;
            let g = sample_sl(n, &mut rng).unwrap();
            let reach = {
                let hinv = g.inverse();
                let s: f64 = hinv.matrix().abs().row_sum().max();
                (s * 4.0).ceil() as i64 + 1
            };
            for norm in [
                Norm::max(n),
                Norm::ld(n, 2.0).unwrap(),
                Norm::ld(n, 1.0).unwrap(),
                Norm::ld(n, 3.0).unwrap(),
            ] {
                let fast = lattice_points_in_region(&g, &norm, 2.0, |_, _| {}).unwrap();
                assert_eq!(fast, brute(&g, &norm, 2.0, reach));
            }
        }
    }

    #[test]
    fn large_ball_count_tracks_volume() {
        let mut rng = rng_from_seed(4);
        let g = sample_lattice(2, &mut rng).unwrap();
        let radius = (1e4 / std::f64::consts::PI).sqrt();
        let c = count_points_by_class(&g, &Norm::ld(2, 2.0).unwrap(), radius).unwrap();
        assert!((c.all as f64 - 1e4).abs() < 1e3, "{}", c.all);
    }

    #[test]
    fn shifted_grid_bijection() {
        let mut rng = rng_from_seed(5);
        let g = sample_affine_lattice(3, &mut rng).unwrap();
        let norm = Norm::ld(3, 2.0).unwrap();
        let mut direct = 0;
        lattice_points_in_region(&g, &norm, 3.0, |v, w| {
            let vf: Vec<f64> = v.iter().map(|x| *x as f64).collect();
            let back = g.inverse().apply(w).unwrap();
            for (a, b) in back.iter().zip(&vf) {
                assert!((a - b).abs() < 1e-9);
            }
            direct += 1;
        })
        .unwrap();
        assert!(direct > 0);
    }

    #[test]
    fn unbounded_region_is_an_error() {
        let g = UnimodularMap::identity(2);
        assert!(lattice_points_in_region(&g, &Norm::max(2), f64::INFINITY, |_, _| {}).is_err());
    }
}
