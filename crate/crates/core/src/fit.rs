//! Small regression helpers used for scaling laws.

use nalgebra::{DMatrix, DVector};

/// Ordinary least-squares polynomial fit; returns coefficients (constant
/// first) and the coefficient of determination.
pub fn polynomial_fit(xs: &[f64], ys: &[f64], degree: usize) -> (Vec<f64>, f64) {
    let design = DMatrix::from_fn(xs.len(), degree + 1, |r, c| xs[r].powi(c as i32));
    let y = DVector::from_row_slice(ys);
    let coeffs = design.clone().svd(true, true).solve(&y, 1e-14).expect("SVD with both factors always solves");
    let pred = &design * &coeffs;
    (coeffs.iter().copied().collect(), r_squared(ys, pred.as_slice()))
}

/// Fit of `y = c x^2` through the origin.
pub fn pure_quadratic_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let num: f64 = xs.iter().zip(ys).map(|(x, y)| x * x * y).sum();
    let den: f64 = xs.iter().map(|x| x.powi(4)).sum();
    let c = num / den;
    let pred: Vec<f64> = xs.iter().map(|x| c * x * x).collect();
    (c, r_squared(ys, &pred))
}

/// Slope of `ln y` against `ln x`.
pub fn power_law_exponent(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    polynomial_fit(&lx, &ly, 1).0[1]
}

pub fn r_squared(ys: &[f64], pred: &[f64]) -> f64 {
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = ys.iter().zip(pred).map(|(y, p)| (y - p).powi(2)).sum();
    1.0 - ss_res / ss_tot
}
