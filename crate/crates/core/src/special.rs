//! Orthogonal-polynomial helpers.

/// Generalized Laguerre polynomials `L_n^alpha(u)` for `n = 0..=n_max`, by the
/// upward three-term recurrence (stable for the small arguments used here).
pub fn laguerre_sequence(n_max: usize, alpha: f64, u: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(1.0);
    if n_max == 0 {
        return out;
    }
    out.push(1.0 + alpha - u);
    for k in 1..n_max {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - u) * out[k] - (kf + alpha) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }
    out
}

pub fn laguerre(n: usize, alpha: f64, u: f64) -> f64 {
    laguerre_sequence(n, alpha, u)[n]
}

const RESCALE: f64 = 1e100;

/// Harmonic-oscillator eigenfunctions `phi_n(x)` for `n = 0..=n_max` in units
/// where the ground-state density is `(2 pi)^(-1/2) exp(-x^2 / 2)`.
///
/// Runs the normalized recurrence
/// `phi_{n+1} = x / sqrt(n+1) * phi_n - sqrt(n / (n+1)) * phi_{n-1}`
/// on a mantissa with a separate log scale so that neither the Gaussian
/// prefactor nor the polynomial growth overflows.
pub fn hermite_functions(x: f64, n_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n_max + 1);
    let mut log_scale = -0.25 * (2.0 * std::f64::consts::PI).ln() - 0.25 * x * x;
    let mut prev = 0.0_f64;
    let mut cur = 1.0_f64;
    out.push(cur * log_scale.exp());
    for n in 0..n_max {
        let nf = n as f64;
        let next = x / (nf + 1.0).sqrt() * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            cur /= RESCALE;
            prev /= RESCALE;
            log_scale += RESCALE.ln();
        }
        out.push(cur * log_scale.exp());
    }
    out
}
