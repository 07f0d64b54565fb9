//! Dense primal active-set method for small least-squares problems over a
//! scaled simplex, `min ‖A z − b‖²` s.t. `z ≥ 0`, `cᵀz = 1`. Finite
//! termination makes it a reference for the interior-point solver.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub fn active_set_simplex_lsq(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Result<DVector<f64>> {
    let n = a.ncols();
    if c.len() != n || b.len() != a.nrows() {
        return Err(Error::DimensionMismatch { expected: n, got: c.len() });
    }
    let q = a.tr_mul(a) * 2.0;
    let lin = a.tr_mul(b) * -2.0;
    let start = (0..n)
        .filter(|&j| c[j] > 0.0)
        .max_by(|&i, &j| c[i].total_cmp(&c[j]))
        .ok_or_else(|| Error::Solver("no positive normalization weight".into()))?;
    let mut z = DVector::zeros(n);
    z[start] = 1.0 / c[start];
    let mut working: Vec<bool> = (0..n).map(|j| j != start).collect();

    for _ in 0..(50 * n + 100) {
        let free: Vec<usize> = (0..n).filter(|&j| !working[j]).collect();
        let k = free.len();
        let mut kkt = DMatrix::zeros(k + 1, k + 1);
        let mut rhs = DVector::zeros(k + 1);
        for (r, &i) in free.iter().enumerate() {
            for (s, &j) in free.iter().enumerate() {
                kkt[(r, s)] = q[(i, j)];
            }
            kkt[(r, k)] = c[i];
            kkt[(k, r)] = c[i];
            rhs[r] = -lin[i];
        }
        rhs[k] = 1.0;
        let sol = kkt.lu().solve(&rhs).ok_or_else(|| Error::Solver("singular KKT system".into()))?;
        let mut step = DVector::zeros(n);
        for (r, &i) in free.iter().enumerate() {
            step[i] = sol[r] - z[i];
        }
        let scale = z.amax().max(1.0);
        if step.amax() <= 1e-12 * scale {
            let mu = sol[k];
            let grad = &q * &z + &lin;
            let worst = (0..n).filter(|&j| working[j]).map(|j| (j, grad[j] + mu * c[j])).min_by(|x, y| x.1.total_cmp(&y.1));
            match worst {
                Some((j, lambda)) if lambda < -1e-10 * grad.amax().max(1.0) => working[j] = false,
                _ => return Ok(z),
            }
        } else {
            let mut alpha = 1.0;
            let mut blocking = None;
            for &i in &free {
                if step[i] < 0.0 {
                    let ratio = -z[i] / step[i];
                    if ratio < alpha {
                        alpha = ratio;
                        blocking = Some(i);
                    }
                }
            }
            z += &step * alpha;
            if let Some(i) = blocking {
                z[i] = 0.0;
                working[i] = true;
            }
        }
    }
    Err(Error::Solver("active-set iteration limit reached".into()))
}
