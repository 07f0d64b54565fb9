//! Log-barrier interior-point method for least squares over a scaled simplex
//! with an optional Fisher-information constraint:
//!
//! ```text
//! minimize ‖A z − b‖²  subject to  z ≥ 0,  cᵀz = 1,  F(z) ≤ B
//! ```
//!
//! where `F(z) = Σ_i w_i u_i(z)² / (t_i(z) + ε)` with `u_i`, `t_i` linear in `z`.
//! Each term is a perspective of a square and hence jointly convex. The
//! barrier method certifies its result through the duality gap `m / t`.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// One term `weight * u(z)² / (t(z) + eps)` of the Fisher functional.
#[derive(Debug, Clone)]
pub struct FisherTerm {
    pub u: Vec<(usize, f64)>,
    pub t: Vec<(usize, f64)>,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct FisherConstraint {
    pub terms: Vec<FisherTerm>,
    pub eps: f64,
    pub bound: f64,
}

fn sparse_dot(entries: &[(usize, f64)], z: &DVector<f64>) -> f64 {
    entries.iter().map(|&(j, a)| a * z[j]).sum()
}

impl FisherConstraint {
    pub fn value(&self, z: &DVector<f64>) -> f64 {
        self.terms
            .iter()
            .map(|term| {
                let u = sparse_dot(&term.u, z);
                let t = sparse_dot(&term.t, z) + self.eps;
                term.weight * u * u / t
            })
            .sum()
    }

    /// Gradient and Hessian of `F`.
    fn derivatives(&self, z: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = z.len();
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        let mut r: Vec<(usize, f64)> = Vec::with_capacity(8);
        for term in &self.terms {
            let u = sparse_dot(&term.u, z);
            let t = sparse_dot(&term.t, z) + self.eps;
            let ratio = u / t;
            for &(j, a) in &term.u {
                grad[j] += term.weight * 2.0 * ratio * a;
            }
            for &(j, a) in &term.t {
                grad[j] -= term.weight * ratio * ratio * a;
            }
            // Hessian of u²/t is (2/t) r rᵀ with r = ∇u − (u/t) ∇t
            r.clear();
            r.extend(term.u.iter().copied());
            r.extend(term.t.iter().map(|&(j, a)| (j, -ratio * a)));
            let s = 2.0 * term.weight / t;
            for &(i, ai) in &r {
                for &(j, aj) in &r {
                    hess[(i, j)] += s * ai * aj;
                }
            }
        }
        (grad, hess)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Target duality gap on the objective.
    pub tol: f64,
    pub max_newton: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_newton: 2000 }
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub z: DVector<f64>,
    pub objective: f64,
    pub fisher: Option<f64>,
    /// Upper bound on `objective − optimum`.
    pub gap: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Least squares over `{z ≥ 0, cᵀz = 1}` with an optional Fisher constraint.
#[derive(Debug, Clone, Copy)]
pub struct SimplexLeastSquares<'a> {
    pub a: &'a DMatrix<f64>,
    pub b: &'a DVector<f64>,
    pub c: &'a DVector<f64>,
    pub fisher: Option<&'a FisherConstraint>,
}

impl SimplexLeastSquares<'_> {
    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        (self.a * z - self.b).norm_squared()
    }

    /// Solves from a strictly positive starting point (uniform if `None`).
    pub fn solve(&self, start: Option<&DVector<f64>>, opts: &SolverOptions) -> Result<Solution> {
        let n = self.a.ncols();
        if self.b.len() != self.a.nrows() {
            return Err(Error::DimensionMismatch { expected: self.a.nrows(), got: self.b.len() });
        }
        if self.c.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.c.len() });
        }
        if self.c.iter().any(|&v| v <= 0.0) {
            return Err(Error::Solver("normalization weights must be positive".into()));
        }
        let mut z = match start {
            Some(s) if s.len() == n && s.iter().all(|&v| v > 0.0) => s.clone(),
            Some(_) => return Err(Error::Solver("starting point must be strictly positive".into())),
            None => DVector::from_element(n, 1.0),
        };
        z /= self.c.dot(&z);

        if let Some(fc) = self.fisher {
            if fc.bound.is_nan() || fc.bound <= 0.0 {
                return Err(Error::InfeasibleBound { bound: fc.bound, minimum: fc.value(&z) });
            }
            let f0 = fc.value(&z);
            if f0 >= fc.bound {
                return Err(Error::InfeasibleBound { bound: fc.bound, minimum: f0 });
            }
        }

        let gram = self.a.tr_mul(self.a);
        let atb = self.a.tr_mul(self.b);
        let m = n as f64 + if self.fisher.is_some() { 1.0 } else { 0.0 };
        let mut t = (m / self.objective(&z).max(1e-3)).max(1.0);
        let mu = 10.0;
        let mut iterations = 0usize;
        let mut converged = false;

        'outer: loop {
            loop {
                if iterations >= opts.max_newton {
                    break 'outer;
                }
                iterations += 1;
                let (grad, hess) = self.barrier_derivatives(&z, t, &gram, &atb);
                let Some(step) = newton_step(&hess, &grad, self.c) else {
                    return Err(Error::Solver("Newton system is not positive definite".into()));
                };
                // centering accuracy limited by round-off in t·objective
                let decrement = -grad.dot(&step);
                if decrement / 2.0 <= 1e-9_f64.max(1e-13 * t * self.objective(&z)) {
                    break;
                }
                let Some(next) = self.line_search(&z, &step, t, &grad) else {
                    break;
                };
                z = next;
            }
            if m / t < opts.tol {
                converged = true;
                break;
            }
            t *= mu;
        }

        // re-project the normalization against round-off drift
        z /= self.c.dot(&z);
        Ok(Solution { objective: self.objective(&z), fisher: self.fisher.map(|fc| fc.value(&z)), gap: m / t, converged, iterations, z })
    }

    fn barrier_value(&self, z: &DVector<f64>, t: f64) -> f64 {
        let mut v = t * self.objective(z) - z.iter().map(|x| x.ln()).sum::<f64>();
        if let Some(fc) = self.fisher {
            let slack = fc.bound - fc.value(z);
            if slack <= 0.0 {
                return f64::INFINITY;
            }
            v -= slack.ln();
        }
        v
    }

    fn barrier_derivatives(&self, z: &DVector<f64>, t: f64, gram: &DMatrix<f64>, atb: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let mut grad = (gram * z - atb) * (2.0 * t);
        let mut hess = gram * (2.0 * t);
        for j in 0..z.len() {
            grad[j] -= 1.0 / z[j];
            hess[(j, j)] += 1.0 / (z[j] * z[j]);
        }
        if let Some(fc) = self.fisher {
            let slack = fc.bound - fc.value(z);
            let (fg, fh) = fc.derivatives(z);
            grad.axpy(1.0 / slack, &fg, 1.0);
            hess += fh / slack;
            hess.ger(1.0 / (slack * slack), &fg, &fg, 1.0);
        }
        (grad, hess)
    }

    fn line_search(&self, z: &DVector<f64>, step: &DVector<f64>, t: f64, grad: &DVector<f64>) -> Option<DVector<f64>> {
        let mut alpha: f64 = 1.0;
        for (zj, dj) in z.iter().zip(step.iter()) {
            if *dj < 0.0 {
                alpha = alpha.min(-0.99 * zj / dj);
            }
        }
        let f0 = self.barrier_value(z, t);
        let slope = grad.dot(step);
        while alpha > 1e-14 {
            let trial = z + step * alpha;
            let f1 = self.barrier_value(&trial, t);
            if f1.is_finite() && f1 <= f0 + 0.25 * alpha * slope {
                return Some(trial);
            }
            alpha *= 0.5;
        }
        None
    }
}

/// Equality-constrained Newton direction: minimizes the quadratic model
/// subject to `cᵀΔ = 0`. Jacobi scaling keeps the barrier-dominated Hessian
/// well conditioned.
fn newton_step(hess: &DMatrix<f64>, grad: &DVector<f64>, c: &DVector<f64>) -> Option<DVector<f64>> {
    let n = grad.len();
    let scale = DVector::from_fn(n, |j, _| 1.0 / hess[(j, j)].sqrt());
    let mut scaled = hess.clone();
    for r in 0..n {
        for col in 0..n {
            scaled[(r, col)] *= scale[r] * scale[col];
        }
    }
    let mut jitter = 0.0;
    let chol = loop {
        let mut m = scaled.clone();
        if jitter > 0.0 {
            for j in 0..n {
                m[(j, j)] += jitter;
            }
        }
        if let Some(ch) = Cholesky::new(m) {
            break ch;
        }
        jitter = if jitter == 0.0 { 1e-12 } else { jitter * 100.0 };
        if jitter > 1e-2 {
            return None;
        }
    };
    let gs = grad.component_mul(&scale);
    let cs = c.component_mul(&scale);
    let x1 = chol.solve(&gs);
    let x2 = chol.solve(&cs);
    let nu = -cs.dot(&x1) / cs.dot(&x2);
    let step_scaled = -(x1 + x2 * nu);
    Some(step_scaled.component_mul(&scale))
}
