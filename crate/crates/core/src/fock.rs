//! Truncated Fock-space states and operators.
//!
//! Units: positions are measured in the ground-state width `Δx`, momenta in
//! `ħ/Δx`. The dimensionless quadratures are `x = a + a†` and
//! `π = i(a† - a)/2`, so `[x, π] = i`, the ground state has `<x²> = 1` and
//! `<π²> = 1/4`, and a momentum width in units of `Δp = ħ/2Δx` is `2 sqrt<π²>`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::PositionGrid;
use crate::special::hermite_functions;

/// Tail population allowed in the top 5% of Fock levels.
pub const TAIL_TOLERANCE: f64 = 1e-6;

const NORM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HilbertParams {
    /// Highest retained Fock level.
    pub n_max: usize,
    /// Lamb-Dicke parameter.
    pub eta: f64,
    pub n_ions: usize,
}

impl HilbertParams {
    pub fn new(n_max: usize, eta: f64, n_ions: usize) -> Result<Self> {
        let p = Self { n_max, eta, n_ions };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_max < 1 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::InvalidParameter(format!("eta must lie in (0, 1), got {}", self.eta)));
        }
        if !(1..=2).contains(&self.n_ions) {
            return Err(Error::InvalidParameter(format!("n_ions must be 1 or 2, got {}", self.n_ions)));
        }
        Ok(())
    }

    pub fn motional_dim(&self) -> usize {
        self.n_max + 1
    }

    pub fn spin_dim(&self) -> usize {
        1 << self.n_ions
    }

    pub fn dim(&self) -> usize {
        self.spin_dim() * self.motional_dim()
    }

    /// Same motional space, one ion.
    pub fn single_ion(&self) -> Self {
        Self { n_ions: 1, ..*self }
    }
}

/// First Fock level counted as truncation tail.
fn tail_start(dim: usize) -> usize {
    dim - (dim / 20).max(1)
}

/// Population in the top 5% of Fock levels of a motional vector.
pub fn tail_population(motion: &DVector<C64>) -> f64 {
    let start = tail_start(motion.len());
    motion.iter().skip(start).map(|c| c.norm_sqr()).sum()
}

// ---------------------------------------------------------------------------
// Operators

/// Dense `(a, a†)` on the truncated space.
pub fn ladder_operators(params: &HilbertParams) -> (DMatrix<C64>, DMatrix<C64>) {
    let d = params.motional_dim();
    let mut a = DMatrix::zeros(d, d);
    for n in 1..d {
        a[(n - 1, n)] = C64::from((n as f64).sqrt());
    }
    let ad = a.adjoint();
    (a, ad)
}

/// Dense `(x, π)` with `x = a + a†`, `π = i(a† - a)/2`.
pub fn quadrature_operators(params: &HilbertParams) -> (DMatrix<C64>, DMatrix<C64>) {
    let (a, ad) = ladder_operators(params);
    let x = &a + &ad;
    let pi = (&ad - &a) * C64::new(0.0, 0.5);
    (x, pi)
}

/// `x v` for the truncated `x = a + a†`, without forming the matrix.
pub fn apply_x(v: &DVector<C64>) -> DVector<C64> {
    let d = v.len();
    DVector::from_fn(d, |n, _| {
        let mut acc = C64::new(0.0, 0.0);
        if n + 1 < d {
            acc += v[n + 1] * ((n + 1) as f64).sqrt();
        }
        if n > 0 {
            acc += v[n - 1] * (n as f64).sqrt();
        }
        acc
    })
}

/// `π v` for the truncated `π = i(a† - a)/2`.
pub fn apply_pi(v: &DVector<C64>) -> DVector<C64> {
    let d = v.len();
    let half_i = C64::new(0.0, 0.5);
    DVector::from_fn(d, |n, _| {
        let mut acc = C64::new(0.0, 0.0);
        if n > 0 {
            acc += v[n - 1] * (n as f64).sqrt();
        }
        if n + 1 < d {
            acc -= v[n + 1] * ((n + 1) as f64).sqrt();
        }
        acc * half_i
    })
}

/// `(<x>, <x²>, <π²>, <n>)` of a (not necessarily normalized) motional vector,
/// weighted by its squared norm.
pub(crate) fn motional_moments(v: &DVector<C64>) -> [f64; 4] {
    let xv = apply_x(v);
    let pv = apply_pi(v);
    let mean_x = v.dotc(&xv).re;
    let x2 = xv.norm_squared();
    let p2 = pv.norm_squared();
    let n = v.iter().enumerate().map(|(k, c)| k as f64 * c.norm_sqr()).sum();
    [mean_x, x2, p2, n]
}

/// Fock-basis amplitudes of the coherent state `|alpha>`,
/// `c_n = e^{-|α|²/2} α^n / sqrt(n!)`, renormalized on the truncated space.
pub fn coherent_state(alpha: C64, params: &HilbertParams) -> Result<DVector<C64>> {
    let r = alpha.norm();
    if r * r + 6.0 * r >= params.n_max as f64 {
        return Err(Error::TruncationUnsafe { alpha_abs: r, n_max: params.n_max });
    }
    let d = params.motional_dim();
    let mut out = DVector::zeros(d);
    out[0] = C64::from((-0.5 * r * r).exp());
    if r == 0.0 {
        return Ok(out);
    }
    // log-magnitude form avoids under/overflow of alpha^n / sqrt(n!)
    let ln_r = r.ln();
    let phase = alpha.arg();
    let mut ln_fact = 0.0;
    for n in 1..d {
        ln_fact += (n as f64).ln();
        let ln_mag = -0.5 * r * r + n as f64 * ln_r - 0.5 * ln_fact;
        out[n] = C64::from_polar(ln_mag.exp(), n as f64 * phase);
    }
    // the truncated tail is below the guard; renormalize so the state is exact unit norm
    let norm = out.norm();
    Ok(out.unscale(norm))
}

pub fn fock_state(n: usize, params: &HilbertParams) -> Result<DVector<C64>> {
    if n > params.n_max {
        return Err(Error::InvalidParameter(format!("Fock level {n} exceeds n_max = {}", params.n_max)));
    }
    let mut v = DVector::zeros(params.motional_dim());
    v[n] = C64::new(1.0, 0.0);
    Ok(v)
}

// ---------------------------------------------------------------------------
// States

/// Joint spin ⊗ motion state. Amplitude index is `spin * (n_max + 1) + n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinMotionState {
    params: HilbertParams,
    amplitudes: DVector<C64>,
    allow_leakage: bool,
}

impl SpinMotionState {
    pub fn new(params: HilbertParams, amplitudes: DVector<C64>) -> Result<Self> {
        params.validate()?;
        if amplitudes.len() != params.dim() {
            return Err(Error::DimensionMismatch { expected: params.dim(), got: amplitudes.len() });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidParameter(format!("state norm {norm} differs from 1")));
        }
        let state = Self { params, amplitudes, allow_leakage: false };
        state.check_tail(None)?;
        Ok(state)
    }

    /// `spin ⊗ motion` from a spin vector of length `2^n_ions` and a normalized motional vector.
    pub fn product(params: HilbertParams, spin: &DVector<C64>, motion: &DVector<C64>) -> Result<Self> {
        if spin.len() != params.spin_dim() {
            return Err(Error::DimensionMismatch { expected: params.spin_dim(), got: spin.len() });
        }
        if motion.len() != params.motional_dim() {
            return Err(Error::DimensionMismatch { expected: params.motional_dim(), got: motion.len() });
        }
        Self::new(params, spin.kronecker(motion))
    }

    /// Motional ground state with every ion in `|->_z`.
    pub fn ground(params: HilbertParams) -> Result<Self> {
        params.validate()?;
        let mut amps = DVector::zeros(params.dim());
        // |-->_z is the last spin index
        amps[(params.spin_dim() - 1) * params.motional_dim()] = C64::new(1.0, 0.0);
        Self::new(params, amps)
    }

    /// Marks the state as allowed to populate the truncation tail.
    pub fn allow_leakage(mut self) -> Self {
        self.allow_leakage = true;
        self
    }

    pub fn leakage_allowed(&self) -> bool {
        self.allow_leakage
    }

    pub fn params(&self) -> &HilbertParams {
        &self.params
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    /// Motional component attached to spin basis index `spin`.
    pub fn spin_block(&self, spin: usize) -> DVector<C64> {
        let d = self.params.motional_dim();
        self.amplitudes.rows(spin * d, d).into_owned()
    }

    pub(crate) fn from_blocks_unchecked(params: HilbertParams, blocks: &[DVector<C64>], allow_leakage: bool) -> Self {
        let d = params.motional_dim();
        let mut amps = DVector::zeros(params.dim());
        for (s, b) in blocks.iter().enumerate() {
            amps.rows_mut(s * d, d).copy_from(b);
        }
        Self { params, amplitudes: amps, allow_leakage }
    }

    pub(crate) fn from_amplitudes_unchecked(params: HilbertParams, amplitudes: DVector<C64>, allow_leakage: bool) -> Self {
        Self { params, amplitudes, allow_leakage }
    }

    /// Truncation-tail population summed over spin blocks.
    pub fn tail_population(&self) -> f64 {
        (0..self.params.spin_dim()).map(|s| tail_population(&self.spin_block(s))).sum()
    }

    pub(crate) fn check_tail(&self, step: Option<usize>) -> Result<()> {
        if self.allow_leakage {
            return Ok(());
        }
        let tail = self.tail_population();
        if tail > TAIL_TOLERANCE {
            return Err(Error::Leaky { tail, step });
        }
        Ok(())
    }

    /// Fock populations traced over spin.
    pub fn fock_populations(&self) -> Vec<f64> {
        let d = self.params.motional_dim();
        let mut p = vec![0.0; d];
        for s in 0..self.params.spin_dim() {
            for (n, c) in self.spin_block(s).iter().enumerate() {
                p[n] += c.norm_sqr();
            }
        }
        p
    }

    pub fn mean_phonon(&self) -> f64 {
        self.moments()[3]
    }

    /// `<x²>` of the motional mode.
    pub fn x_second_moment(&self) -> f64 {
        self.moments()[1]
    }

    /// `<π²>` of the motional mode.
    pub fn pi_second_moment(&self) -> f64 {
        self.moments()[2]
    }

    pub fn mean_x(&self) -> f64 {
        self.moments()[0]
    }

    fn moments(&self) -> [f64; 4] {
        (0..self.params.spin_dim()).fold([0.0; 4], |mut acc, s| {
            let m = motional_moments(&self.spin_block(s));
            for (a, b) in acc.iter_mut().zip(m) {
                *a += b;
            }
            acc
        })
    }

    /// Expectation of a spin operator (dimension `2^n_ions`) tensored with identity on motion.
    pub fn spin_expectation(&self, op: &DMatrix<C64>) -> f64 {
        let ns = self.params.spin_dim();
        let blocks: Vec<_> = (0..ns).map(|s| self.spin_block(s)).collect();
        let mut acc = C64::new(0.0, 0.0);
        for r in 0..ns {
            for c in 0..ns {
                if op[(r, c)] != C64::new(0.0, 0.0) {
                    acc += op[(r, c)] * blocks[r].dotc(&blocks[c]);
                }
            }
        }
        acc.re
    }

    /// `|<self|other>|²`.
    pub fn fidelity(&self, other: &SpinMotionState) -> f64 {
        self.amplitudes.dotc(&other.amplitudes).norm_sqr()
    }
}

/// Member of a [`MotionalEnsemble`].
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMember {
    pub weight: f64,
    pub state: DVector<C64>,
}

/// Mixed motional state as a weighted list of pure states.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionalEnsemble {
    params: HilbertParams,
    members: Vec<EnsembleMember>,
}

impl MotionalEnsemble {
    pub fn new(params: HilbertParams, members: Vec<EnsembleMember>) -> Result<Self> {
        params.validate()?;
        if members.is_empty() {
            return Err(Error::InvalidParameter("ensemble has no members".into()));
        }
        let mut total = 0.0;
        for m in &members {
            if m.weight < 0.0 || !m.weight.is_finite() {
                return Err(Error::InvalidParameter(format!("negative ensemble weight {}", m.weight)));
            }
            if m.state.len() != params.motional_dim() {
                return Err(Error::DimensionMismatch { expected: params.motional_dim(), got: m.state.len() });
            }
            if (m.state.norm() - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::InvalidParameter("ensemble member is not normalized".into()));
            }
            total += m.weight;
        }
        if (total - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::InvalidParameter(format!("ensemble weights sum to {total}")));
        }
        Ok(Self { params, members })
    }

    pub fn pure(params: HilbertParams, state: DVector<C64>) -> Result<Self> {
        Self::new(params, vec![EnsembleMember { weight: 1.0, state }])
    }

    /// Uniform mixture of several ensembles (e.g. independent trials).
    pub fn mixture(parts: &[MotionalEnsemble]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::InvalidParameter("empty mixture".into()))?;
        let w = 1.0 / parts.len() as f64;
        let members = parts
            .iter()
            .flat_map(|e| e.members.iter().map(move |m| EnsembleMember { weight: m.weight * w, state: m.state.clone() }))
            .collect();
        Self::new(first.params, members)
    }

    pub fn params(&self) -> &HilbertParams {
        &self.params
    }

    pub fn members(&self) -> &[EnsembleMember] {
        &self.members
    }

    pub fn fock_populations(&self) -> Vec<f64> {
        let mut p = vec![0.0; self.params.motional_dim()];
        for m in &self.members {
            for (n, c) in m.state.iter().enumerate() {
                p[n] += m.weight * c.norm_sqr();
            }
        }
        p
    }

    fn moments(&self) -> [f64; 4] {
        self.members.iter().fold([0.0; 4], |mut acc, m| {
            for (a, b) in acc.iter_mut().zip(motional_moments(&m.state)) {
                *a += m.weight * b;
            }
            acc
        })
    }

    pub fn mean_x(&self) -> f64 {
        self.moments()[0]
    }

    pub fn x_second_moment(&self) -> f64 {
        self.moments()[1]
    }

    pub fn pi_second_moment(&self) -> f64 {
        self.moments()[2]
    }

    pub fn mean_phonon(&self) -> f64 {
        self.moments()[3]
    }

    pub fn tail_population(&self) -> f64 {
        self.members.iter().map(|m| m.weight * tail_population(&m.state)).sum()
    }
}

// ---------------------------------------------------------------------------
// Position densities

/// Harmonic-oscillator eigenfunctions tabulated on a grid, `table[(i, n)] = phi_n(x_i)`.
pub fn hermite_table(grid: &PositionGrid, n_max: usize) -> DMatrix<f64> {
    let mut table = DMatrix::zeros(grid.len(), n_max + 1);
    for (i, &x) in grid.points().iter().enumerate() {
        for (n, v) in hermite_functions(x, n_max).into_iter().enumerate() {
            table[(i, n)] = v;
        }
    }
    table
}

/// Exact position density `<δ(x - x_i)>` of an ensemble on a grid.
pub fn exact_position_density(ensemble: &MotionalEnsemble, grid: &PositionGrid) -> Result<Vec<f64>> {
    let table = hermite_table(grid, ensemble.params().n_max);
    let mut density = vec![0.0; grid.len()];
    for m in &ensemble.members {
        let re = DVector::from_iterator(m.state.len(), m.state.iter().map(|c| c.re));
        let im = DVector::from_iterator(m.state.len(), m.state.iter().map(|c| c.im));
        let psi_re = &table * re;
        let psi_im = &table * im;
        for i in 0..grid.len() {
            density[i] += m.weight * (psi_re[i] * psi_re[i] + psi_im[i] * psi_im[i]);
        }
    }
    let mass = grid.integrate(&density);
    if mass < 0.999 {
        return Err(Error::GridTooNarrow { mass });
    }
    Ok(density)
}

/// Position density of a joint state, traced over spin.
pub fn state_position_density(state: &SpinMotionState, grid: &PositionGrid) -> Result<Vec<f64>> {
    let params = *state.params();
    let members = (0..params.spin_dim())
        .filter_map(|s| {
            let b = state.spin_block(s);
            let w = b.norm_squared();
            (w > 0.0).then(|| EnsembleMember { weight: w, state: b.unscale(w.sqrt()) })
        })
        .collect();
    exact_position_density(&MotionalEnsemble { params, members }, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn params(n_max: usize) -> HilbertParams {
        HilbertParams::new(n_max, 0.06, 1).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(HilbertParams::new(0, 0.06, 1).is_err());
        assert!(HilbertParams::new(10, 0.0, 1).is_err());
        assert!(HilbertParams::new(10, 1.0, 1).is_err());
        assert!(HilbertParams::new(10, 0.06, 3).is_err());
        assert_eq!(HilbertParams::new(10, 0.06, 2).unwrap().dim(), 44);
    }

    #[test]
    fn ladder_smallest_space() {
        let (a, ad) = ladder_operators(&params(1));
        assert_eq!(a[(0, 1)], C64::new(1.0, 0.0));
        assert_eq!(a[(0, 0)] + a[(1, 0)] + a[(1, 1)], C64::new(0.0, 0.0));
        assert_eq!(ad, a.adjoint());
    }

    #[test]
    fn number_operator_and_truncated_commutator() {
        let p = params(7);
        let (a, ad) = ladder_operators(&p);
        let num = &ad * &a;
        let comm = &a * &ad - &ad * &a;
        for r in 0..8 {
            for c in 0..8 {
                let expect_n = if r == c { r as f64 } else { 0.0 };
                assert_abs_diff_eq!(num[(r, c)].re, expect_n, epsilon = 1e-14);
                let expect_c = match (r == c, r) {
                    (true, 7) => -7.0,
                    (true, _) => 1.0,
                    _ => 0.0,
                };
                assert_abs_diff_eq!(comm[(r, c)].re, expect_c, epsilon = 1e-13);
                assert_abs_diff_eq!(comm[(r, c)].im, 0.0, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn ground_state_quadrature_moments() {
        let p = params(10);
        let (x, pi) = quadrature_operators(&p);
        assert!((x.adjoint() - &x).norm() < 1e-15);
        assert!((pi.adjoint() - &pi).norm() < 1e-15);
        let x2 = &x * &x;
        let p2 = &pi * &pi;
        let anti = &x * &pi + &pi * &x;
        assert_abs_diff_eq!(x2[(0, 0)].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p2[(0, 0)].re, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(anti[(0, 0)].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn matrix_free_quadratures_match_dense() {
        let p = params(12);
        let (x, pi) = quadrature_operators(&p);
        let v = DVector::from_fn(13, |n, _| C64::new((n as f64).sin(), 0.3 * n as f64));
        assert!((apply_x(&v) - &x * &v).norm() < 1e-12);
        assert!((apply_pi(&v) - &pi * &v).norm() < 1e-12);
    }

    #[test]
    fn coherent_states() {
        let p = params(40);
        let zero = coherent_state(C64::new(0.0, 0.0), &p).unwrap();
        assert_eq!(zero, fock_state(0, &p).unwrap());

        let plus = coherent_state(C64::new(1.0, 0.0), &p).unwrap();
        let minus = coherent_state(C64::new(-1.0, 0.0), &p).unwrap();
        assert_abs_diff_eq!(plus.dotc(&minus).norm_sqr(), (-4.0f64).exp(), epsilon = 1e-14);

        let two = coherent_state(C64::new(2.0, 0.0), &p).unwrap();
        assert_abs_diff_eq!(motional_moments(&two)[3], 4.0, epsilon = 1e-8);

        assert!(matches!(coherent_state(C64::new(4.0, 0.0), &params(30)), Err(Error::TruncationUnsafe { .. })));
    }

    #[test]
    fn coherent_tail_is_below_guard() {
        // at alpha = 1 the Poisson tail beyond n = 7 is ~1e-5, so the bound only holds from alpha = 3
        for &alpha in &[3.0f64, 6.0, 10.0] {
            let n_max = (alpha * alpha + 6.0 * alpha).ceil() as usize + 1;
            let v = coherent_state(C64::new(alpha, 0.0), &params(n_max)).unwrap();
            let cut = (alpha * alpha + 6.0 * alpha).floor() as usize;
            let tail: f64 = v.iter().skip(cut + 1).map(|c| c.norm_sqr()).sum();
            assert!(tail < 1e-6, "alpha {alpha}: tail {tail}");
        }
    }

    #[test]
    fn ground_and_coherent_densities() {
        let p = params(30);
        let grid = PositionGrid::new(12.0, 0.05).unwrap();
        let ground = MotionalEnsemble::pure(p, fock_state(0, &p).unwrap()).unwrap();
        let dens = exact_position_density(&ground, &grid).unwrap();
        for (x, d) in grid.points().iter().zip(&dens) {
            let g = (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
            assert_abs_diff_eq!(*d, g, epsilon = 1e-14);
        }
        let shifted = MotionalEnsemble::pure(p, coherent_state(C64::new(1.0, 0.0), &p).unwrap()).unwrap();
        let dens = exact_position_density(&shifted, &grid).unwrap();
        for (x, d) in grid.points().iter().zip(&dens) {
            let g = (-(x - 2.0) * (x - 2.0) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
            assert_abs_diff_eq!(*d, g, epsilon = 1e-10);
        }
    }

    #[test]
    fn mixture_density_moments() {
        let p = params(30);
        let grid = PositionGrid::new(12.0, 0.05).unwrap();
        let members =
            [1.0, -1.0].iter().map(|&a| EnsembleMember { weight: 0.5, state: coherent_state(C64::new(a, 0.0), &p).unwrap() }).collect();
        let ens = MotionalEnsemble::new(p, members).unwrap();
        let dens = exact_position_density(&ens, &grid).unwrap();
        assert_abs_diff_eq!(grid.integrate(&dens), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(grid.moment(&dens, 1), 0.0, epsilon = 1e-10);
        let c = grid.center();
        for j in 0..c {
            assert_abs_diff_eq!(dens[c + j], dens[c - j], epsilon = 1e-14);
        }
        // two humps at x = ±2
        let at = |x: f64| dens[(c as f64 + x / 0.05).round() as usize];
        assert!(at(2.0) > at(0.0) && at(-2.0) > at(0.0));
    }

    #[test]
    fn narrow_grid_is_rejected() {
        let p = params(30);
        let ens = MotionalEnsemble::pure(p, coherent_state(C64::new(3.0, 0.0), &p).unwrap()).unwrap();
        let grid = PositionGrid::new(2.0, 0.05).unwrap();
        assert!(matches!(exact_position_density(&ens, &grid), Err(Error::GridTooNarrow { .. })));
    }

    #[test]
    fn hermite_normalization_high_orders() {
        let grid = PositionGrid::new(90.0, 0.02).unwrap();
        let h = grid.spacing();
        for &n in &[0usize, 100, 700] {
            let norm: f64 = grid.points().iter().map(|&x| hermite_functions(x, n)[n].powi(2)).sum::<f64>() * h;
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-6);
        }
    }

    #[test]
    fn ensemble_validation() {
        let p = params(5);
        let v = fock_state(0, &p).unwrap();
        assert!(MotionalEnsemble::new(p, vec![EnsembleMember { weight: 0.7, state: v.clone() }]).is_err());
        assert!(MotionalEnsemble::new(p, vec![EnsembleMember { weight: 1.0, state: v.scale(2.0) }]).is_err());
        assert!(MotionalEnsemble::new(p, vec![EnsembleMember { weight: 1.0, state: v }]).is_ok());
    }
}
