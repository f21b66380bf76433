//! Lattices distributed by the invariant probability measure on
//! SL_n(ℝ)/SL_n(ℤ), and their affine counterparts.
//!
//! A uniformly random index-p sublattice of ℤ^n, rescaled to covolume one,
//! equidistributes to the invariant measure as the prime p grows. For
//! p = 2^31 − 1 the discrepancy is far below Monte Carlo resolution. The
//! sublattice basis is LLL-reduced and then rotated by a Haar-random
//! orthogonal matrix.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{renormalize, sample_sl, UnimodularMap};
use crate::error::{Error, Result};
use crate::rng::SimRng;

pub const DEFAULT_HECKE_PRIME: u64 = 2_147_483_647;
const LLL_DELTA: f64 = 0.99;

/// How random lattices are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LatticeSampler {
    /// Normalized Gaussian matrices; absolutely continuous but not invariant.
    Gaussian,
    /// Random index-`prime` sublattices; invariant up to O(1/prime).
    Hecke { prime: u64 },
}

impl Default for LatticeSampler {
    fn default() -> Self {
        LatticeSampler::Hecke {
            prime: DEFAULT_HECKE_PRIME,
        }
    }
}

impl LatticeSampler {
    /// A linear map whose image of ℤ^n is the sampled lattice; with `affine`
    /// the translation is uniform on the torus ℝ^n / hℤ^n.
    pub fn sample(&self, n: usize, rng: &mut SimRng, affine: bool) -> Result<UnimodularMap> {
        let mut g = match *self {
            LatticeSampler::Gaussian => sample_sl(n, rng)?,
            LatticeSampler::Hecke { prime } => sample_lattice_with_prime(n, rng, prime)?,
        };
        if affine {
            let u: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            g.z = &g.h * nalgebra::DVector::from_vec(u);
        }
        Ok(g)
    }
}

pub fn sample_lattice(n: usize, rng: &mut SimRng) -> Result<UnimodularMap> {
    LatticeSampler::default().sample(n, rng, false)
}

pub fn sample_affine_lattice(n: usize, rng: &mut SimRng) -> Result<UnimodularMap> {
    LatticeSampler::default().sample(n, rng, true)
}

fn sample_lattice_with_prime(n: usize, rng: &mut SimRng, p: u64) -> Result<UnimodularMap> {
    if n < 2 {
        return Err(Error::invalid("n", "dimension must be at least 2"));
    }
    if !(2..1 << 62).contains(&p) {
        return Err(Error::invalid("prime", "must lie in [2, 2^62)"));
    }
    let c = loop {
        let c: Vec<u64> = (0..n).map(|_| rng.random_range(0..p)).collect();
        if c.iter().any(|&x| x != 0) {
            break c;
        }
    };
    let k = c.iter().rposition(|&x| x != 0).expect("nonzero vector");
    let inv = mod_pow(c[k], p - 2, p);
    let p_i = p as i128;
    let mut basis: Vec<Vec<i128>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut b = vec![0i128; n];
        if i == k {
            b[k] = p_i;
        } else {
            let ci = (c[i] as u128 * inv as u128 % p as u128) as i128;
            let centered = if ci > p_i / 2 { ci - p_i } else { ci };
            b[i] = 1;
            b[k] = -centered;
        }
        basis.push(b);
    }
    lll_reduce(&mut basis, LLL_DELTA);
    let scale = (p as f64).powf(-1.0 / n as f64);
    let b = DMatrix::from_fn(n, n, |i, j| basis[j][i] as f64 * scale);
    let mut h = haar_rotation(n, rng) * b;
    if h.determinant() < 0.0 {
        h.column_mut(0).neg_mut();
    }
    Ok(UnimodularMap {
        h: renormalize(&h),
        z: nalgebra::DVector::zeros(n),
    })
}

fn mod_pow(base: u64, mut exp: u64, modulus: u64) -> u64 {
    let m = modulus as u128;
    let mut acc = 1u128;
    let mut b = base as u128 % m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % m;
        }
        b = b * b % m;
        exp >>= 1;
    }
    acc as u64
}

/// Haar-random element of SO(n): QR of a Gaussian matrix with the signs of
/// R's diagonal moved into Q, then a column flip if needed.
fn haar_rotation(n: usize, rng: &mut SimRng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = a.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    q
}

/// LLL reduction of the basis vectors `basis[i]` in place (Euclidean inner
/// product, Lovász parameter `delta`).
pub fn lll_reduce(basis: &mut [Vec<i128>], delta: f64) {
    let n = basis.len();
    if n < 2 {
        return;
    }
    let mut k = 1;
    while k < n {
        for j in (0..k).rev() {
            let (_, mu) = gram_schmidt(basis);
            let q = mu[k][j].round();
            if q != 0.0 {
                let qi = q as i128;
                let (head, tail) = basis.split_at_mut(k);
                for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= qi * y;
                }
            }
        }
        let (norms, mu) = gram_schmidt(basis);
        if norms[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * norms[k - 1] {
            k += 1;
        } else {
            basis.swap(k, k - 1);
            k = (k - 1).max(1);
        }
    }
}

/// Squared Gram–Schmidt norms and the μ coefficients.
fn gram_schmidt(basis: &[Vec<i128>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = basis.len();
    let b: Vec<Vec<f64>> = basis.iter().map(|v| v.iter().map(|&x| x as f64).collect()).collect();
    let mut star: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut norms = vec![0.0; n];
    let mut mu = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut v = b[i].clone();
        for j in 0..i {
            let m = dot(&b[i], &star[j]) / norms[j];
            mu[i][j] = m;
            for (x, y) in v.iter_mut().zip(&star[j]) {
                *x -= m * y;
            }
        }
        norms[i] = dot(&v, &v);
        star.push(v);
    }
    (norms, mu)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn det_i128(b: &[Vec<i128>]) -> f64 {
        let n = b.len();
        DMatrix::from_fn(n, n, |i, j| b[j][i] as f64).determinant()
    }

    #[test]
    fn lll_preserves_the_lattice_and_shortens() {
        let mut basis = vec![
            vec![1, 0, -123_456_789],
            vec![0, 1, -987_654_321],
            vec![0, 0, 2_147_483_647],
        ];
        let before = det_i128(&basis).abs();
        lll_reduce(&mut basis, 0.99);
        assert!((det_i128(&basis).abs() - before).abs() <= 1e-6 * before);
        let (norms, mu) = gram_schmidt(&basis);
        for i in 1..3 {
            for j in 0..i {
                assert!(mu[i][j].abs() <= 0.5 + 1e-9);
            }
            assert!(norms[i] >= (0.99 - mu[i][i - 1].powi(2)) * norms[i - 1] - 1e-6);
        }
        let shortest = basis
            .iter()
            .map(|v| v.iter().map(|&x| (x as f64).powi(2)).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        assert!(shortest.sqrt() < 4.0 * before.cbrt());
    }

    #[test]
    fn lattices_are_unimodular_and_reduced() {
        let mut rng = rng_from_seed(1);
        for n in 2..=4 {
            for _ in 0..200 {
                let g = sample_lattice(n, &mut rng).unwrap();
                assert!((g.matrix().determinant() - 1.0).abs() < 1e-9);
                assert!(g.matrix().abs().max() < 50.0);
            }
        }
    }

    #[test]
    fn affine_shift_lies_in_the_fundamental_domain() {
        let mut rng = rng_from_seed(2);
        for _ in 0..100 {
            let g = sample_affine_lattice(3, &mut rng).unwrap();
            let hinv = g.matrix().clone().try_inverse().unwrap();
            let u = hinv * g.translation();
            assert!(u.iter().all(|x| (-1e-12..1.0 + 1e-12).contains(x)));
        }
    }

    #[test]
    fn small_prime_gives_index_p_sublattice() {
        let mut rng = rng_from_seed(3);
        let sampler = LatticeSampler::Hecke { prime: 7 };
        let g = sampler.sample(2, &mut rng, false).unwrap();
        let scaled = g.matrix() * 7f64.sqrt();
        let gram = scaled.transpose() * &scaled;
        for v in gram.iter() {
            assert!((v - v.round()).abs() < 1e-9, "Gram matrix {gram}");
        }
    }

    #[test]
    fn mod_pow_inverts() {
        let p = DEFAULT_HECKE_PRIME;
        for a in [1u64, 2, 12345, p - 1] {
            assert_eq!(a as u128 * mod_pow(a, p - 2, p) as u128 % p as u128, 1);
        }
    }

    #[test]
    fn haar_rotation_is_special_orthogonal() {
        let mut rng = rng_from_seed(4);
        let q = haar_rotation(4, &mut rng);
        let id = q.transpose() * &q;
        assert!((id - DMatrix::<f64>::identity(4, 4)).abs().max() < 1e-12);
        assert!((q.determinant() - 1.0).abs() < 1e-12);
    }
}
