//! Density reconstruction from Fourier-component estimates.
//!
//! The estimate minimizes the squared residuals of the predicted cosine (and
//! optionally sine) components over nonnegative normalized densities on a
//! grid, optionally subject to the kinetic-energy bound
//! `∫ p'² / p dx ≤ 4 <π²>`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PositionGrid;
use crate::probe::{width_from_curvature, ProbeAxis, ProbeScan, SpinPrep, WidthEstimate};
use crate::solver::{FisherConstraint, FisherTerm, SimplexLeastSquares, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardKind {
    Linear,
    XDiagonal,
}

/// Effective probe coordinate `g(x)`: the identity, or the position-diagonal
/// form of the probe to third order in η.
pub fn kernel_argument(kind: ForwardKind, eta: f64, x: f64) -> f64 {
    match kind {
        ForwardKind::Linear => x,
        ForwardKind::XDiagonal => x * (1.0 - eta * eta / 8.0 * (x * x + 1.0)),
    }
}

/// Matrices `Ccos[j, i] = h cos(k_j g(x_i))` and `Csin` likewise.
#[derive(Debug, Clone)]
pub struct ForwardModel {
    pub kind: ForwardKind,
    pub eta: f64,
    pub k: Vec<f64>,
    pub grid: PositionGrid,
    pub ccos: DMatrix<f64>,
    pub csin: DMatrix<f64>,
}

pub fn build_forward_model(k_grid: &[f64], grid: &PositionGrid, kind: ForwardKind, eta: f64) -> Result<ForwardModel> {
    if k_grid.is_empty() {
        return Err(Error::InvalidParameter("empty k grid".into()));
    }
    if kind == ForwardKind::XDiagonal && !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!("x_diagonal forward model needs 0 < eta < 1, got {eta}")));
    }
    let h = grid.spacing();
    let g: Vec<f64> = grid.points().iter().map(|&x| kernel_argument(kind, eta, x)).collect();
    let ccos = DMatrix::from_fn(k_grid.len(), g.len(), |j, i| (k_grid[j] * g[i]).cos() * h);
    let csin = DMatrix::from_fn(k_grid.len(), g.len(), |j, i| (k_grid[j] * g[i]).sin() * h);
    Ok(ForwardModel { kind, eta, k: k_grid.to_vec(), grid: grid.clone(), ccos, csin })
}

/// Safety factor applied to the measured `<π²>`.
pub const KINETIC_SAFETY: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KineticBound {
    /// Measured `<π²>` from the momentum width.
    pub pi_second_moment: f64,
    /// Inflated value used as the constraint.
    pub bound: f64,
    pub width: WidthEstimate,
}

/// `<π²> = (w_p / 2)²` from a momentum-axis cosine scan.
pub fn estimate_kinetic_bound(p_scan: &ProbeScan) -> Result<KineticBound> {
    if p_scan.axis != ProbeAxis::P {
        return Err(Error::InvalidParameter("kinetic bound needs a momentum-axis scan".into()));
    }
    let width = width_from_curvature(p_scan)?;
    let pi2 = (width.width / 2.0).powi(2);
    Ok(KineticBound { pi_second_moment: pi2, bound: KINETIC_SAFETY * pi2, width })
}

/// Smoothing floor of the Fisher functional on a grid with spacing `h`.
pub fn fisher_floor(h: f64) -> f64 {
    1e-10 / h
}

/// Discretized `∫ p'² / p dx` with central differences, zero density beyond
/// the grid ends and denominator `p_i + ε`.
pub fn fisher_functional(grid: &PositionGrid, p: &[f64]) -> f64 {
    let h = grid.spacing();
    let eps = fisher_floor(h);
    let n = p.len();
    (0..n)
        .map(|i| {
            let up = if i + 1 < n { p[i + 1] } else { 0.0 };
            let down = if i > 0 { p[i - 1] } else { 0.0 };
            let d = (up - down) / (2.0 * h);
            d * d / (p[i] + eps)
        })
        .sum::<f64>()
        * h
}

/// Measured Fourier components on a common k grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierData {
    pub k: Vec<f64>,
    pub cos: Vec<f64>,
    pub sin: Option<Vec<f64>>,
    /// Shots per point, used for variance weighting.
    pub shots: Option<u64>,
}

impl FourierData {
    pub fn from_scans(cos: &ProbeScan, sin: Option<&ProbeScan>) -> Result<Self> {
        if cos.spin_prep != SpinPrep::PlusZ {
            return Err(Error::InvalidParameter("cosine data must come from a |+>_z scan".into()));
        }
        let k = cos.k_values();
        let sin_values = match sin {
            Some(s) => {
                if s.spin_prep != SpinPrep::PlusY {
                    return Err(Error::InvalidParameter("sine data must come from a |+>_y scan".into()));
                }
                if s.k_values() != k {
                    return Err(Error::InvalidParameter("cosine and sine scans use different k grids".into()));
                }
                Some(s.estimates())
            }
            None => None,
        };
        let shots = cos.points.first().map(|p| p.shots).filter(|&s| s > 0);
        Ok(Self { k, cos: cos.estimates(), sin: sin_values, shots })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructOptions {
    /// Bound on `<π²>`; the Fisher functional is limited to four times it.
    pub kinetic_bound: Option<f64>,
    /// Restrict to even densities. Implied when no sine data is given.
    pub even: bool,
    /// Weight residuals by the inverse binomial variance.
    pub variance_weighting: bool,
    /// Objective tolerance; defaults to `1e-8` times the number of k points.
    pub tol: Option<f64>,
    pub max_iter: usize,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        Self { kinetic_bound: None, even: false, variance_weighting: false, tol: None, max_iter: 2000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub grid: PositionGrid,
    pub density: Vec<f64>,
    pub objective: f64,
    /// Fisher functional of the result.
    pub fisher: f64,
    pub converged: bool,
    pub iterations: usize,
    pub duality_gap: f64,
    /// Sum of squared measured sine components, when an even fit ignores them.
    pub odd_residual: Option<f64>,
}

/// Maps density grid indices to optimization variables.
struct Parametrization {
    index: Vec<usize>,
    n_vars: usize,
}

impl Parametrization {
    fn new(n: usize, even: bool) -> Self {
        if even {
            let c = n / 2;
            Self { index: (0..n).map(|i| i.abs_diff(c)).collect(), n_vars: c + 1 }
        } else {
            Self { index: (0..n).collect(), n_vars: n }
        }
    }

    fn collapse(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(m.nrows(), self.n_vars);
        for (i, &j) in self.index.iter().enumerate() {
            let mut col = out.column_mut(j);
            col += m.column(i);
        }
        out
    }

    fn expand(&self, z: &DVector<f64>) -> Vec<f64> {
        self.index.iter().map(|&j| z[j]).collect()
    }
}

fn fisher_constraint(param: &Parametrization, h: f64, bound: f64) -> FisherConstraint {
    let n = param.index.len();
    let terms = (0..n)
        .map(|i| {
            let mut u: Vec<(usize, f64)> = Vec::with_capacity(2);
            let mut push = |j: usize, a: f64| match u.iter_mut().find(|e| e.0 == j) {
                Some(e) => e.1 += a,
                None => u.push((j, a)),
            };
            if i + 1 < n {
                push(param.index[i + 1], 1.0 / (2.0 * h));
            }
            if i > 0 {
                push(param.index[i - 1], -1.0 / (2.0 * h));
            }
            u.retain(|e| e.1 != 0.0);
            FisherTerm { u, t: vec![(param.index[i], 1.0)], weight: h }
        })
        .collect();
    FisherConstraint { terms, eps: fisher_floor(h), bound }
}

fn residual_weights(data: &FourierData, values: &[f64], enabled: bool) -> Result<Vec<f64>> {
    if !enabled {
        return Ok(vec![1.0; values.len()]);
    }
    let shots = data.shots.ok_or_else(|| Error::InvalidParameter("variance weighting needs shot counts".into()))? as f64;
    let raw: Vec<f64> = values.iter().map(|v| shots / (1.0 - v * v).max(1.0 / shots)).collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    Ok(raw.into_iter().map(|w| w / mean).collect())
}

/// Least-squares objective of a density against the data (sine rows included
/// when sine data is present).
pub fn data_objective(data: &FourierData, model: &ForwardModel, p: &[f64]) -> f64 {
    let p = DVector::from_row_slice(p);
    let rc = &model.ccos * &p - DVector::from_row_slice(&data.cos);
    let mut total = rc.norm_squared();
    if let Some(s) = &data.sin {
        total += (&model.csin * &p - DVector::from_row_slice(s)).norm_squared();
    }
    total
}

pub fn reconstruct_density(data: &FourierData, model: &ForwardModel, opts: &ReconstructOptions) -> Result<DensityEstimate> {
    if data.k != model.k {
        return Err(Error::InvalidParameter("data and forward model use different k grids".into()));
    }
    if data.cos.len() != data.k.len() {
        return Err(Error::DimensionMismatch { expected: data.k.len(), got: data.cos.len() });
    }
    if let Some(s) = &data.sin {
        if s.len() != data.k.len() {
            return Err(Error::DimensionMismatch { expected: data.k.len(), got: s.len() });
        }
    }
    let grid = &model.grid;
    let h = grid.spacing();
    let even = opts.even || data.sin.is_none();
    let param = Parametrization::new(grid.len(), even);

    let wc = residual_weights(data, &data.cos, opts.variance_weighting)?;
    let mut blocks = vec![(model.ccos.clone(), data.cos.clone(), wc)];
    if let (false, Some(s)) = (even, &data.sin) {
        let ws = residual_weights(data, s, opts.variance_weighting)?;
        blocks.push((model.csin.clone(), s.clone(), ws));
    }
    let rows: usize = blocks.iter().map(|b| b.1.len()).sum();
    let mut a = DMatrix::zeros(rows, param.n_vars);
    let mut b = DVector::zeros(rows);
    let mut r0 = 0;
    for (m, v, w) in &blocks {
        let collapsed = param.collapse(m);
        for j in 0..v.len() {
            let sw = w[j].sqrt();
            a.row_mut(r0 + j).copy_from(&(collapsed.row(j) * sw));
            b[r0 + j] = v[j] * sw;
        }
        r0 += v.len();
    }

    let mut c = DVector::zeros(param.n_vars);
    for &j in &param.index {
        c[j] += h;
    }
    let fisher = match opts.kinetic_bound {
        Some(bound) if bound.is_nan() || bound <= 0.0 => return Err(Error::InfeasibleBound { bound, minimum: 0.0 }),
        Some(bound) => Some(fisher_constraint(&param, h, 4.0 * bound)),
        None => None,
    };
    // smooth even start that vanishes just beyond the grid
    let half_width = grid.extent() + h;
    let start = DVector::from_fn(param.n_vars, |j, _| {
        let i = param.index.iter().position(|&v| v == j).unwrap_or(0);
        (std::f64::consts::FRAC_PI_2 * grid.points()[i] / half_width).cos().powi(2)
    });
    let problem = SimplexLeastSquares { a: &a, b: &b, c: &c, fisher: fisher.as_ref() };
    let solver_opts = SolverOptions { tol: opts.tol.unwrap_or(1e-8 * data.k.len() as f64), max_newton: opts.max_iter };
    let sol = problem.solve(Some(&start), &solver_opts).map_err(|e| match e {
        Error::InfeasibleBound { bound, minimum } => Error::InfeasibleBound { bound: bound / 4.0, minimum: minimum / 4.0 },
        other => other,
    })?;

    let density = param.expand(&sol.z);
    let odd_residual = match (even, &data.sin) {
        (true, Some(s)) => Some(s.iter().map(|v| v * v).sum()),
        _ => None,
    };
    Ok(DensityEstimate {
        grid: grid.clone(),
        fisher: fisher_functional(grid, &density),
        density,
        objective: sol.objective,
        converged: sol.converged,
        iterations: sol.iterations,
        duality_gap: sol.gap,
        odd_residual,
    })
}
