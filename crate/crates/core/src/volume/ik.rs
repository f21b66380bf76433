/// `I_k(z, ψ)`: `z^{k+1}` when `ψ ≥ z^{k+2}`, otherwise
/// `(ψ/z)·Σ_{i=0}^{k} log^i(z^{k+2}/ψ)/i!` (with `0^0 = 1`).
///
/// `I_{n−2}(z, ψ(z))` is the density in `z` of the shell volume for the
/// coordinate product under the maximum norm, up to the factor `2^n·n`.
pub fn i_k_closed_form(k: u32, z: f64, psi_val: f64) -> f64 {
    let l = (k as f64 + 2.0) * z.ln() - psi_val.ln();
    if l <= 0.0 {
        return z.powi(k as i32 + 1);
    }
    (psi_val / z) * exp_partial_sum(k, l)
}

/// `Σ_{i=0}^{k} x^i / i!`.
pub(crate) fn exp_partial_sum(k: u32, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..=k {
        term *= x / i as f64;
        sum += term;
    }
    sum
}
