//! Random elements of SL_n(ℝ) and ASL_n(ℝ), compact windows, operator norms,
//! and Haar-random lattices.
//!
//! [`sample_sl`] draws from a law that is absolutely continuous with respect
//! to Haar measure on SL_n(ℝ); that is all the null/conull statements about
//! "almost every g" need. Expectations over the space of lattices (Siegel
//! means, variances, emptiness probabilities) need lattices distributed by the
//! invariant probability measure itself, which [`lattice::sample_lattice`]
//! provides.

mod lattice;
mod opnorm;

pub use lattice::{lll_reduce, sample_affine_lattice, sample_lattice, LatticeSampler, DEFAULT_HECKE_PRIME};
pub use opnorm::{operator_norm, OperatorNorm};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::norm::Norm;
use crate::rng::SimRng;

const DET_TOLERANCE: f64 = 1e-9;
const RENORMALIZED: f64 = 1e-12;
const SINGULAR_CUTOFF: f64 = 1e-12;
const MAX_SINGULAR_RETRIES: usize = 1_000;

/// Default rejection cap for [`sample_in_window`].
pub const WINDOW_RETRY_CAP: u64 = 1_000_000;

/// `g = (h, z)` acting by `v ↦ h·v + z` with `det h = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MapRepr", into = "MapRepr")]
pub struct UnimodularMap {
    h: DMatrix<f64>,
    z: DVector<f64>,
}

impl UnimodularMap {
    pub fn new(h: DMatrix<f64>, z: DVector<f64>) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::invalid("h", "matrix must be square"));
        }
        check_dim(h.nrows(), z.len())?;
        let det = h.determinant();
        if !((det - 1.0).abs() <= DET_TOLERANCE) {
            return Err(Error::invalid("h", format!("determinant {det} is not 1")));
        }
        Ok(UnimodularMap { h, z })
    }

    pub fn linear(h: DMatrix<f64>) -> Result<Self> {
        let n = h.nrows();
        UnimodularMap::new(h, DVector::zeros(n))
    }

    pub fn identity(n: usize) -> Self {
        UnimodularMap {
            h: DMatrix::identity(n, n),
            z: DVector::zeros(n),
        }
    }

    /// Reads `n` rows of `n` whitespace-separated reals, optionally followed
    /// by one more row holding the translation.
    pub fn from_text(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|t| !t.is_empty())
                    .map(|t| {
                        t.parse::<f64>()
                            .ok()
                            .filter(|x| x.is_finite())
                            .ok_or_else(|| Error::parse(l, format!("`{t}` is not a finite number")))
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<_>>()?;
        let n = rows.first().map(Vec::len).unwrap_or(0);
        if n < 2 || !(rows.len() == n || rows.len() == n + 1) || rows.iter().any(|r| r.len() != n) {
            return Err(Error::parse(
                text,
                "expected an n×n matrix (n ≥ 2) and an optional translation row",
            ));
        }
        let h = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let z = if rows.len() == n + 1 {
            DVector::from_vec(rows[n].clone())
        } else {
            DVector::zeros(n)
        };
        UnimodularMap::new(h, z)
    }

    pub fn to_text(&self) -> String {
        let n = self.dim();
        let mut out = String::new();
        for i in 0..n {
            let row: Vec<String> = (0..n).map(|j| format!("{:e}", self.h[(i, j)])).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        if !self.is_linear() {
            let row: Vec<String> = self.z.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.h
    }

    pub fn translation(&self) -> &DVector<f64> {
        &self.z
    }

    pub fn is_linear(&self) -> bool {
        self.z.iter().all(|v| *v == 0.0)
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), v.len())?;
        let mut out = vec![0.0; self.dim()];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for (i, o) in out.iter_mut().enumerate().take(n) {
            let mut acc = self.z[i];
            for (j, vj) in v.iter().enumerate() {
                acc += self.h[(i, j)] * vj;
            }
            *o = acc;
        }
    }

    pub fn inverse(&self) -> UnimodularMap {
        let hinv = self
            .h
            .clone()
            .try_inverse()
            .expect("unimodular matrices are invertible");
        let z = -(&hinv * &self.z);
        UnimodularMap { h: hinv, z }
    }

    /// Row-major entries of `h`.
    pub fn matrix_row_major(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|ij| self.h[ij])
            .collect()
    }
}

/// Rescales `h` by `det(h)^{-1/n}`; `h` must have positive determinant.
/// Matrices already within rounding of determinant one are returned as is,
/// so renormalizing is idempotent.
pub fn renormalize(h: &DMatrix<f64>) -> DMatrix<f64> {
    let n = h.nrows() as f64;
    let det = h.determinant();
    if (det - 1.0).abs() <= RENORMALIZED {
        return h.clone();
    }
    h / det.powf(1.0 / n)
}

/// `h = A / det(A)^{1/n}` with Gaussian `A` (first row negated when
/// `det A < 0`), and `z = 0`.
pub fn sample_sl(n: usize, rng: &mut SimRng) -> Result<UnimodularMap> {
    if n < 2 {
        return Err(Error::invalid("n", "dimension must be at least 2"));
    }
    for _ in 0..MAX_SINGULAR_RETRIES {
        let mut a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let det = a.determinant();
        if det.abs() < SINGULAR_CUTOFF {
            continue;
        }
        if det < 0.0 {
            a.row_mut(0).neg_mut();
        }
        let h = renormalize(&renormalize(&a));
        return Ok(UnimodularMap {
            h,
            z: DVector::zeros(n),
        });
    }
    Err(Error::RejectionCap {
        attempts: MAX_SINGULAR_RETRIES as u64,
    })
}

/// Like [`sample_sl`] with `z` uniform in the ν-ball of radius `shift_bound`.
pub fn sample_asl(n: usize, rng: &mut SimRng, shift_bound: f64, norm: &Norm) -> Result<UnimodularMap> {
    check_dim(n, norm.dim())?;
    if !(shift_bound.is_finite() && shift_bound >= 0.0) {
        return Err(Error::invalid("shift_bound", "must be finite and nonnegative"));
    }
    let mut g = sample_sl(n, rng)?;
    if shift_bound > 0.0 {
        g.z = uniform_in_ball(n, rng, shift_bound, norm);
    }
    Ok(g)
}

/// Rejection from the bounding box `[−r, r]^n`, which contains the ν-ball
/// because `‖·‖_∞ ≤ ν`.
fn uniform_in_ball(n: usize, rng: &mut SimRng, radius: f64, norm: &Norm) -> DVector<f64> {
    loop {
        let z = DVector::from_fn(n, |_, _| rng.random_range(-radius..=radius));
        if norm.value(z.as_slice()) <= radius {
            return z;
        }
    }
}

/// A compact set `{(h, z) : ‖h‖_ν, ‖h⁻¹‖_ν ≤ op_norm_bound, ν(z) ≤ shift_bound}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactWindow {
    pub op_norm_bound: f64,
    pub shift_bound: f64,
}

impl CompactWindow {
    pub fn new(op_norm_bound: f64, shift_bound: f64) -> Result<Self> {
        if !(op_norm_bound.is_finite() && op_norm_bound >= 1.0) {
            return Err(Error::invalid("op_norm_bound", "must be at least 1"));
        }
        if !(shift_bound.is_finite() && shift_bound >= 0.0) {
            return Err(Error::invalid("shift_bound", "must be nonnegative"));
        }
        Ok(CompactWindow {
            op_norm_bound,
            shift_bound,
        })
    }

    /// Checks the three bounds, using guaranteed upper bounds on the operator
    /// norms.
    pub fn contains(&self, g: &UnimodularMap, norm: &Norm) -> bool {
        norm.value(g.z.as_slice()) <= self.shift_bound
            && operator_norm(&g.h, norm).upper_bound <= self.op_norm_bound
            && operator_norm(&g.inverse().h, norm).upper_bound <= self.op_norm_bound
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowSample {
    pub map: UnimodularMap,
    /// Number of draws until acceptance (≥ 1).
    pub attempts: u64,
}

/// Rejection-samples [`sample_asl`] until the draw lies in `window`.
pub fn sample_in_window(
    n: usize,
    rng: &mut SimRng,
    window: &CompactWindow,
    norm: &Norm,
    retry_cap: u64,
) -> Result<WindowSample> {
    for attempt in 1..=retry_cap {
        let g = sample_asl(n, rng, window.shift_bound, norm)?;
        if window.contains(&g, norm) {
            return Ok(WindowSample {
                map: g,
                attempts: attempt,
            });
        }
    }
    Err(Error::RejectionCap { attempts: retry_cap })
}

/// Empirical window constants of a batch of maps: `D = sup max(‖h‖, ‖h⁻¹‖)`
/// (upper bounds) and `E = sup ν(z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowConstants {
    pub d_k: f64,
    pub e_k: f64,
}

pub fn window_constants<'a>(maps: impl IntoIterator<Item = &'a UnimodularMap>, norm: &Norm) -> WindowConstants {
    let mut d_k = 1.0f64;
    let mut e_k = 0.0f64;
    for g in maps {
        d_k = d_k
            .max(operator_norm(&g.h, norm).upper_bound)
            .max(operator_norm(&g.inverse().h, norm).upper_bound);
        e_k = e_k.max(norm.value(g.z.as_slice()));
    }
    WindowConstants { d_k, e_k }
}

#[derive(Serialize, Deserialize)]
struct MapRepr {
    n: usize,
    h: Vec<f64>,
    z: Vec<f64>,
}

impl TryFrom<MapRepr> for UnimodularMap {
    type Error = Error;
    fn try_from(r: MapRepr) -> Result<Self> {
        check_dim(r.n * r.n, r.h.len())?;
        UnimodularMap::new(DMatrix::from_row_slice(r.n, r.n, &r.h), DVector::from_vec(r.z))
    }
}

impl From<UnimodularMap> for MapRepr {
    fn from(g: UnimodularMap) -> Self {
        MapRepr {
            n: g.dim(),
            h: g.matrix_row_major(),
            z: g.z.iter().copied().collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn sl_samples_have_unit_determinant() {
        let mut rng = rng_from_seed(1);
        let g = sample_sl(2, &mut rng).unwrap();
        assert!((g.matrix().determinant() - 1.0).abs() <= 1e-9);
        for _ in 0..1_000 {
            let g = sample_sl(3, &mut rng).unwrap();
            assert!((g.matrix().determinant() - 1.0).abs() <= 1e-9);
            assert!(g.is_linear());
        }
    }

    #[test]
    fn different_seeds_give_different_maps() {
        let a = sample_sl(2, &mut rng_from_seed(1)).unwrap();
        let b = sample_sl(2, &mut rng_from_seed(2)).unwrap();
        assert_ne!(a, b);
        assert_eq!(a, sample_sl(2, &mut rng_from_seed(1)).unwrap());
    }

    #[test]
    fn renormalization_is_idempotent() {
        let mut rng = rng_from_seed(3);
        for n in 2..=5 {
            for _ in 0..200 {
                let g = sample_sl(n, &mut rng).unwrap();
                let again = renormalize(g.matrix());
                let diff = (&again - g.matrix()).abs().max();
                assert!(diff <= 1e-15, "{diff}");
            }
        }
    }

    #[test]
    fn sign_fix_makes_determinants_positive() {
        let mut rng = rng_from_seed(4);
        for _ in 0..10_000 {
            let g = sample_sl(2, &mut rng).unwrap();
            assert!(g.matrix().determinant() > 0.0);
        }
    }

    #[test]
    fn affine_shifts_respect_the_bound() {
        let mut rng = rng_from_seed(5);
        let g = sample_asl(2, &mut rng, 0.0, &Norm::max(2)).unwrap();
        assert!(g.is_linear());
        for _ in 0..1_000 {
            let g = sample_asl(2, &mut rng, 1.0, &Norm::max(2)).unwrap();
            assert!(g.translation().iter().all(|v| (-1.0..=1.0).contains(v)));
        }
        let l2 = Norm::ld(3, 2.0).unwrap();
        for _ in 0..1_000 {
            let g = sample_asl(3, &mut rng, 1.0, &l2).unwrap();
            assert!((g.matrix().determinant() - 1.0).abs() <= 1e-9);
            assert!(l2.value(g.translation().as_slice()) <= 1.0);
        }
    }

    #[test]
    fn action_on_origin_and_basis() {
        let mut rng = rng_from_seed(6);
        let g = sample_asl(3, &mut rng, 2.0, &Norm::max(3)).unwrap();
        let origin = g.apply(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(origin, g.translation().iter().copied().collect::<Vec<_>>());
        for i in 0..3 {
            let mut e = [0.0; 3];
            e[i] = 1.0;
            let image = g.apply(&e).unwrap();
            for r in 0..3 {
                let col = image[r] - g.translation()[r];
                assert!((col - g.matrix()[(r, i)]).abs() <= 1e-15);
            }
        }
        let inv = g.inverse();
        let back = inv.apply(&g.apply(&[1.0, -2.0, 3.0]).unwrap()).unwrap();
        for (a, b) in back.iter().zip([1.0, -2.0, 3.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn loose_window_accepts_almost_everything() {
        let mut rng = rng_from_seed(7);
        let window = CompactWindow::new(1e6, 0.0).unwrap();
        let norm = Norm::max(2);
        let mut attempts = 0;
        for _ in 0..10_000 {
            attempts += sample_in_window(2, &mut rng, &window, &norm, 1_000).unwrap().attempts;
        }
        let rate = 10_000.0 / attempts as f64;
        assert!(rate > 0.999, "acceptance rate {rate}");
    }

    #[test]
    fn isometry_window_hits_the_cap() {
        let mut rng = rng_from_seed(8);
        let window = CompactWindow::new(1.0, 0.0).unwrap();
        let r = sample_in_window(2, &mut rng, &window, &Norm::max(2), 20_000);
        assert_eq!(r, Err(Error::RejectionCap { attempts: 20_000 }));
    }

    #[test]
    fn window_samples_satisfy_their_bounds() {
        let mut rng = rng_from_seed(9);
        let window = CompactWindow::new(5.0, 1.0).unwrap();
        let norm = Norm::max(3);
        let maps: Vec<UnimodularMap> = (0..300)
            .map(|_| {
                sample_in_window(3, &mut rng, &window, &norm, WINDOW_RETRY_CAP)
                    .unwrap()
                    .map
            })
            .collect();
        for g in &maps {
            assert!(operator_norm(g.matrix(), &norm).upper_bound <= 5.0);
            assert!(operator_norm(g.inverse().matrix(), &norm).upper_bound <= 5.0);
            assert!(norm.value(g.translation().as_slice()) <= 1.0);
        }
        let k = window_constants(&maps, &norm);
        assert!(k.d_k <= 5.0 && k.d_k >= 1.0);
        assert!(k.e_k <= 1.0);
    }

    #[test]
    fn matrix_text_round_trip() {
        let g = sample_asl(3, &mut rng_from_seed(10), 1.0, &Norm::max(3)).unwrap();
        let back = UnimodularMap::from_text(&g.to_text()).unwrap();
        assert_eq!(back, g);
        assert!(UnimodularMap::from_text("2 0\n0 2\n").is_err());
        assert!(UnimodularMap::from_text("1 0\n0\n").is_err());
        assert!(UnimodularMap::from_text("1 x\n0 1\n").is_err());
        let id = UnimodularMap::from_text("# identity\n1 0\n0 1\n").unwrap();
        assert_eq!(id, UnimodularMap::identity(2));
    }

    #[test]
    fn serde_round_trip() {
        let g = sample_asl(2, &mut rng_from_seed(11), 0.5, &Norm::max(2)).unwrap();
        let json = serde_json::to_string(&g).unwrap();
        let back: UnimodularMap = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
    }
}
