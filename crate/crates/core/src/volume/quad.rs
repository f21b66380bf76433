//! Adaptive quadrature.

use crate::error::{Error, Result};

pub const ABS_TOL: f64 = 1e-10;
pub const REL_TOL: f64 = 1e-8;
pub const MAX_DEPTH: u32 = 60;

/// Value and estimated absolute error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub abs_error: f64,
}

/// Adaptive Simpson on `[a, b]` accepting a panel when
/// `|S_left + S_right − S| ≤ 15·tol`, with `tol = max(abs, rel·|I|)` split
/// in half at each bisection.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            abs_error: 0.0,
        });
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = simpson(a, b, fa, fm, fb);
    // A coarse global magnitude for the relative tolerance.
    let coarse = coarse_magnitude(&f, a, b);
    let tol = abs_tol.max(rel_tol * coarse.max(whole.abs()));
    let mut err = 0.0;
    let value = simpson_step(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut err)
        .ok_or(Error::QuadratureNonConvergence { a, b })?;
    if !value.is_finite() {
        return Err(Error::QuadratureNonConvergence { a, b });
    }
    Ok(Quadrature { value, abs_error: err })
}

fn coarse_magnitude<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    const PANELS: usize = 64;
    let h = (b - a) / PANELS as f64;
    (0..PANELS).map(|i| f(a + (i as f64 + 0.5) * h).abs() * h.abs()).sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    err: &mut f64,
) -> Option<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || (m - a).abs() <= f64::EPSILON * m.abs() {
        *err += delta.abs() / 15.0;
        return Some(left + right + delta / 15.0);
    }
    if depth == 0 {
        return None;
    }
    let l = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, err)?;
    let r = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, err)?;
    Some(l + r)
}

/// [`adaptive_simpson`] over `[a, b] ⊂ (0, ∞)` split into geometric panels
/// `a·2^i`, which keeps wide shells well resolved.
pub fn integrate_shell<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            abs_error: 0.0,
        });
    }
    let mut edges = vec![a];
    if a > 0.0 {
        let mut x = 2.0 * a;
        while x < b {
            edges.push(x);
            x *= 2.0;
        }
    }
    edges.push(b);
    let panels = (edges.len() - 1) as f64;
    let mut total = Quadrature {
        value: 0.0,
        abs_error: 0.0,
    };
    let magnitude: f64 = edges.windows(2).map(|w| coarse_magnitude(&f, w[0], w[1])).sum();
    for w in edges.windows(2) {
        let abs = (ABS_TOL / panels).max(REL_TOL * magnitude / panels);
        let q = adaptive_simpson(&f, w[0], w[1], abs, REL_TOL)?;
        total.value += q.value;
        total.abs_error += q.abs_error;
    }
    Ok(total)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_5,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_48,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_56,
    0.104_790_010_322_250_19,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_42,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_82,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_64,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn kronrod_panel<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let x = h * XGK[i];
        let (f1, f2) = (f(c - x), f(c + x));
        kronrod += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            gauss += WG[i / 2] * (f1 + f2);
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Globally adaptive 7/15-point Gauss–Kronrod: the panel with the largest
/// error estimate is bisected until the total estimate meets the tolerance.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            abs_error: 0.0,
        });
    }
    let (v, e) = kronrod_panel(&f, a, b);
    let mut panels = vec![(a, b, v, e)];
    loop {
        let value: f64 = panels.iter().map(|p| p.2).sum();
        let error: f64 = panels.iter().map(|p| p.3).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Quadrature {
                value,
                abs_error: error,
            });
        }
        if panels.len() >= max_panels {
            return Err(Error::QuadratureNonConvergence { a, b });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .map(|(i, _)| i)
            .expect("nonempty");
        let (lo, hi, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        for (l, r) in [(lo, mid), (mid, hi)] {
            let (v, e) = kronrod_panel(&f, l, r);
            panels.push((l, r, v, e));
        }
    }
}
