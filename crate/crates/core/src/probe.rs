//! Fourier-component probe of the motional marginals and the carrier Rabi scan.
//!
//! A probe pulse `exp(-i (k/2) σ_x ⊗ M)` with `M = x̂` (x axis) or `M = 2π̂`
//! (p axis) maps `<cos kM>` onto `<σ_z>` for a spin prepared in `|+>_z`, and
//! `<sin kM>` for `|+>_y`. The observable estimate is `2 P(+) − 1`.

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::dynamics::{bichromatic_hamiltonian, cached_spectrum, carrier_couplings, evolve, CarrierScale, FidelityModel};
use crate::error::{Error, Result};
use crate::fock::{MotionalEnsemble, SpinMotionState};
use crate::solver::{SimplexLeastSquares, SolverOptions};
use crate::spin;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeAxis {
    X,
    P,
}

impl ProbeAxis {
    /// Motional phase of the probe pulse.
    pub fn phi_minus(self) -> f64 {
        match self {
            ProbeAxis::X => 0.0,
            ProbeAxis::P => FRAC_PI_2,
        }
    }
}

/// Spin preparation before a probe pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpinPrep {
    /// Measures the cosine component.
    PlusZ,
    /// Measures the sine component.
    PlusY,
}

impl SpinPrep {
    pub fn spinor(self) -> DVector<C64> {
        let v = match self {
            SpinPrep::PlusZ => spin::plus_z(),
            SpinPrep::PlusY => spin::plus_y(),
        };
        DVector::from_row_slice(&v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub k: f64,
    pub estimate: f64,
    /// Zero for noiseless expectation values.
    pub shots: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeScan {
    pub axis: ProbeAxis,
    pub spin_prep: SpinPrep,
    pub model: FidelityModel,
    pub points: Vec<ScanPoint>,
    /// Probe coupling `η Ω_p` in rad/s when the scan was taken in physical
    /// time; `k = 2 η Ω_p t`.
    #[serde(default)]
    pub probe_rabi: Option<f64>,
}

impl ProbeScan {
    pub fn k_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.k).collect()
    }

    pub fn estimates(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.estimate).collect()
    }

    /// Probe durations in seconds, if the probe coupling is known.
    pub fn probe_times(&self) -> Option<Vec<f64>> {
        let r = self.probe_rabi?;
        Some(self.points.iter().map(|p| p.k / (2.0 * r)).collect())
    }
}

fn check_k_grid(k_grid: &[f64]) -> Result<()> {
    if k_grid.iter().any(|k| !(*k >= 0.0 && k.is_finite())) {
        return Err(Error::InvalidParameter("k values must be finite and non-negative".into()));
    }
    if k_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("k values must be strictly increasing".into()));
    }
    Ok(())
}

/// Probe wavenumber from a probe duration: `k = 2 η Ω_p t`.
pub fn k_from_probe_time(eta: f64, omega_p: f64, t: f64) -> f64 {
    2.0 * eta * omega_p * t
}

/// `n` evenly spaced wavenumbers on `[0, k_max]`.
pub fn k_grid(k_max: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|j| k_max * j as f64 / (n - 1) as f64).collect(),
    }
}

/// 61 points on `[0, 3]`.
pub fn default_k_grid() -> Vec<f64> {
    k_grid(3.0, 61)
}

fn check_axis(axis: ProbeAxis, model: FidelityModel) -> Result<f64> {
    let phi = axis.phi_minus();
    if axis == ProbeAxis::P && matches!(model, FidelityModel::ThirdOrder | FidelityModel::XDiagonal) {
        return Err(Error::UnsupportedQuadrature { model: model.name(), phi_minus: phi });
    }
    Ok(phi)
}

/// Spectral measure of the probe operator `M` in a motional ensemble:
/// `<e^{ikM}> = Σ_j μ_j e^{i k λ_j}`.
#[derive(Debug, Clone)]
pub struct SpectralMeasure {
    eigenvalues: Vec<f64>,
    weights: Vec<f64>,
}

impl SpectralMeasure {
    pub fn new(ensemble: &MotionalEnsemble, axis: ProbeAxis, model: FidelityModel) -> Result<Self> {
        let phi = check_axis(axis, model)?;
        let p = ensemble.params();
        let spectrum = cached_spectrum(model, p.n_max, p.eta);
        let mut weights = vec![0.0; p.motional_dim()];
        for m in ensemble.members() {
            let y = spectrum.to_eigenbasis(phi, &m.state);
            for (w, c) in weights.iter_mut().zip(y.iter()) {
                *w += m.weight * c.norm_sqr();
            }
        }
        Ok(Self { eigenvalues: spectrum.eigenvalues().iter().copied().collect(), weights })
    }

    pub fn characteristic(&self, k: f64) -> C64 {
        self.eigenvalues.iter().zip(&self.weights).map(|(&l, &w)| C64::from_polar(w, k * l)).sum()
    }

    pub fn expected(&self, prep: SpinPrep, k: f64) -> f64 {
        let c = self.characteristic(k);
        match prep {
            SpinPrep::PlusZ => c.re,
            SpinPrep::PlusY => c.im,
        }
    }
}

/// Noiseless `<σ_z>` after the probe pulse.
pub fn expected_observable(ensemble: &MotionalEnsemble, prep: SpinPrep, k: f64, axis: ProbeAxis, model: FidelityModel) -> Result<f64> {
    Ok(SpectralMeasure::new(ensemble, axis, model)?.expected(prep, k))
}

/// The same quantity by evolving each member through the probe pulse and
/// measuring the spin.
pub fn expected_observable_evolved(
    ensemble: &MotionalEnsemble,
    prep: SpinPrep,
    k: f64,
    axis: ProbeAxis,
    model: FidelityModel,
) -> Result<f64> {
    let phi = check_axis(axis, model)?;
    let params = ensemble.params().single_ion();
    let h = bichromatic_hamiltonian(&params, 0.0, phi, model)?;
    let sz = spin::sigma_z();
    let mut total = 0.0;
    for m in ensemble.members() {
        let state = SpinMotionState::product(params, &prep.spinor(), &m.state)?.allow_leakage();
        let after = evolve(&state, &h, k / 2.0)?;
        total += m.weight * after.spin_expectation(&sz);
    }
    Ok(total)
}

/// Noiseless scan over `k_grid`.
pub fn exact_scan(ensemble: &MotionalEnsemble, prep: SpinPrep, k_grid: &[f64], axis: ProbeAxis, model: FidelityModel) -> Result<ProbeScan> {
    check_k_grid(k_grid)?;
    let measure = SpectralMeasure::new(ensemble, axis, model)?;
    let points = k_grid.iter().map(|&k| ScanPoint { k, estimate: measure.expected(prep, k), shots: 0 }).collect();
    Ok(ProbeScan { axis, spin_prep: prep, model, points, probe_rabi: None })
}

/// Scan with binomial projection noise: `shots` spin measurements per point.
/// Each point draws from its own stream of the seeded generator, so the
/// result does not depend on the order points are evaluated in.
pub fn simulate_scan(
    ensemble: &MotionalEnsemble,
    prep: SpinPrep,
    k_grid: &[f64],
    axis: ProbeAxis,
    model: FidelityModel,
    shots: u64,
    seed: u64,
) -> Result<ProbeScan> {
    if shots == 0 {
        return Err(Error::InvalidParameter("shots must be positive".into()));
    }
    let mut scan = exact_scan(ensemble, prep, k_grid, axis, model)?;
    for (j, point) in scan.points.iter_mut().enumerate() {
        point.estimate = sample_estimate(point.estimate, shots, seed, j as u64)?;
        point.shots = shots;
    }
    Ok(scan)
}

fn sample_estimate(expected: f64, shots: u64, seed: u64, stream: u64) -> Result<f64> {
    let prob = ((1.0 + expected) / 2.0).clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let dist = Binomial::new(shots, prob).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let hits = dist.sample(&mut rng);
    Ok(2.0 * hits as f64 / shots as f64 - 1.0)
}

/// Threshold on the estimate below which points leave the curvature window.
pub const CURVATURE_THRESHOLD: f64 = 0.6;
pub const CURVATURE_MIN_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthEstimate {
    /// Width `w` with `<O>(k) ≈ 1 − (w²/2) k²`, in units of the probe axis.
    pub width: f64,
    /// Fourth-order coefficient of the log fit.
    pub quartic: f64,
    pub k_min: f64,
    pub k_max: f64,
    pub points_used: usize,
    pub rms_residual: f64,
    /// Estimates decrease monotonically across the window.
    pub monotone: bool,
}

/// Width from the curvature of a cosine scan at small `k`.
///
/// The window is the leading run of points with estimate above
/// [`CURVATURE_THRESHOLD`]. Within it `ln(<O>/<O>(0))` is fitted by
/// `−(w²/2) k² + c k⁴`, which is exact for Gaussian marginals and absorbs the
/// leading non-Gaussian correction otherwise.
pub fn width_from_curvature(scan: &ProbeScan) -> Result<WidthEstimate> {
    if scan.spin_prep != SpinPrep::PlusZ {
        return Err(Error::CurvatureFit("width needs a cosine (|+>_z) scan".into()));
    }
    let mut pts = scan.points.clone();
    pts.sort_by(|a, b| a.k.total_cmp(&b.k));
    let window: Vec<ScanPoint> = pts.iter().copied().take_while(|p| p.estimate > CURVATURE_THRESHOLD).collect();
    if window.len() < CURVATURE_MIN_POINTS {
        return Err(Error::CurvatureFit(format!(
            "only {} points above {CURVATURE_THRESHOLD} at small k; need {CURVATURE_MIN_POINTS}",
            window.len()
        )));
    }
    let y0 = if window[0].k == 0.0 { window[0].estimate } else { 1.0 };
    let fit_pts: Vec<(f64, f64)> = window.iter().filter(|p| p.k > 0.0).map(|p| (p.k, (p.estimate / y0).ln())).collect();
    if fit_pts.len() < 2 {
        return Err(Error::CurvatureFit("no points with k > 0".into()));
    }
    let design = DMatrix::from_fn(fit_pts.len(), 2, |r, c| fit_pts[r].0.powi(2 * (c as i32 + 1)));
    let rhs = DVector::from_iterator(fit_pts.len(), fit_pts.iter().map(|p| p.1));
    let coef = design.clone().svd(true, true).solve(&rhs, 1e-14).map_err(|e| Error::CurvatureFit(e.to_string()))?;
    let (c2, c4) = (coef[0], coef[1]);
    if c2 >= 0.0 {
        return Err(Error::CurvatureFit(format!("non-negative curvature {c2}")));
    }
    let resid = &design * &coef - rhs;
    let monotone = window.windows(2).all(|w| w[1].estimate <= w[0].estimate);
    Ok(WidthEstimate {
        width: (-2.0 * c2).sqrt(),
        quartic: c4,
        k_min: window[0].k,
        k_max: window[window.len() - 1].k,
        points_used: window.len(),
        rms_residual: (resid.norm_squared() / fit_pts.len() as f64).sqrt(),
        monotone,
    })
}

// ---------------------------------------------------------------------------
// Carrier Rabi scan

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabiScan {
    pub eta: f64,
    pub carrier_scale: CarrierScale,
    /// Pulse durations in units of 1/Ω.
    pub times: Vec<f64>,
    /// Probability of leaving the initial spin state.
    pub excitation: Vec<f64>,
    pub shots: u64,
}

/// 200 points on `[0, 40π]`.
pub fn default_rabi_times() -> Vec<f64> {
    (0..200).map(|j| 40.0 * PI * j as f64 / 199.0).collect()
}

fn rabi_matrix(times: &[f64], couplings: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(times.len(), couplings.len(), |r, n| (couplings[n] * times[r] / 2.0).sin().powi(2))
}

/// Carrier flopping of the ensemble with Fock-dependent Rabi frequencies
/// `Ω_n = Ω L_n(η²)`. With `shots > 0` each point carries binomial noise.
pub fn carrier_rabi_scan(ensemble: &MotionalEnsemble, times: &[f64], scale: CarrierScale, shots: u64, seed: u64) -> Result<RabiScan> {
    let p = ensemble.params();
    let couplings = carrier_couplings(FidelityModel::AllOrder, p.n_max, p.eta, scale);
    let pops = DVector::from_vec(ensemble.fock_populations());
    let exact = rabi_matrix(times, &couplings) * pops;
    let excitation = if shots == 0 {
        exact.iter().copied().collect()
    } else {
        exact
            .iter()
            .enumerate()
            .map(|(j, &e)| sample_estimate(2.0 * e - 1.0, shots, seed, j as u64).map(|v| (v + 1.0) / 2.0))
            .collect::<Result<_>>()?
    };
    Ok(RabiScan { eta: p.eta, carrier_scale: scale, times: times.to_vec(), excitation, shots })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhononFit {
    pub populations: Vec<f64>,
    pub mean_phonon: f64,
    pub residual: f64,
    pub converged: bool,
}

/// Fock populations `p_0..p_{n_cap-1}` from a Rabi scan by nonnegative,
/// normalized least squares. Without an explicit cap it is
/// `2 * expected_mean + 20`, limited by the number of scan points.
pub fn fit_mean_phonon(scan: &RabiScan, n_cap: Option<usize>, expected_mean: Option<f64>) -> Result<PhononFit> {
    if scan.times.len() != scan.excitation.len() {
        return Err(Error::DimensionMismatch { expected: scan.times.len(), got: scan.excitation.len() });
    }
    let distinct = scan.times.iter().map(|t| t.to_bits()).collect::<BTreeSet<_>>().len();
    let n_cap = match (n_cap, expected_mean) {
        (Some(n), _) => n,
        (None, Some(m)) => ((2.0 * m).ceil() as usize + 20).min(distinct),
        (None, None) => 20.min(distinct),
    };
    if n_cap == 0 {
        return Err(Error::InvalidParameter("n_cap must be positive".into()));
    }
    if distinct < n_cap {
        return Err(Error::IllConditioned(format!("{distinct} distinct times for {n_cap} populations")));
    }
    let couplings = carrier_couplings(FidelityModel::AllOrder, n_cap - 1, scan.eta, scan.carrier_scale);
    let a = rabi_matrix(&scan.times, &couplings);
    let b = DVector::from_vec(scan.excitation.clone());
    let c = DVector::from_element(n_cap, 1.0);
    let problem = SimplexLeastSquares { a: &a, b: &b, c: &c, fisher: None };
    let opts = SolverOptions { tol: 1e-10 * scan.times.len() as f64, ..SolverOptions::default() };
    let sol = problem.solve(None, &opts)?;
    let populations: Vec<f64> = sol.z.iter().copied().collect();
    let mean_phonon = populations.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    Ok(PhononFit { populations, mean_phonon, residual: sol.objective, converged: sol.converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{coherent_state, fock_state, HilbertParams};
    use approx::assert_abs_diff_eq;

    fn ground(n_max: usize) -> MotionalEnsemble {
        let p = HilbertParams::new(n_max, 0.06, 1).unwrap();
        MotionalEnsemble::pure(p, fock_state(0, &p).unwrap()).unwrap()
    }

    #[test]
    fn ground_state_cosine_is_gaussian() {
        let e = ground(60);
        for axis in [ProbeAxis::X, ProbeAxis::P] {
            for k in [0.0, 0.5, 1.3, 2.5] {
                let v = expected_observable(&e, SpinPrep::PlusZ, k, axis, FidelityModel::LambDicke).unwrap();
                assert_abs_diff_eq!(v, (-k * k / 2.0).exp(), epsilon = 1e-10);
                let s = expected_observable(&e, SpinPrep::PlusY, k, axis, FidelityModel::LambDicke).unwrap();
                assert_abs_diff_eq!(s, 0.0, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn coherent_state_sine_component() {
        let p = HilbertParams::new(80, 0.06, 1).unwrap();
        let e = MotionalEnsemble::pure(p, coherent_state(C64::new(1.5, 0.0), &p).unwrap()).unwrap();
        for k in [0.3, 1.1, 2.0] {
            let s = expected_observable(&e, SpinPrep::PlusY, k, ProbeAxis::X, FidelityModel::LambDicke).unwrap();
            assert_abs_diff_eq!(s, (3.0 * k).sin() * (-k * k / 2.0).exp(), epsilon = 1e-9);
        }
    }

    #[test]
    fn spectral_and_evolved_routes_agree() {
        let p = HilbertParams::new(50, 0.06, 1).unwrap();
        let e = MotionalEnsemble::pure(p, coherent_state(C64::new(1.0, 0.7), &p).unwrap()).unwrap();
        for model in FidelityModel::ALL {
            for prep in [SpinPrep::PlusZ, SpinPrep::PlusY] {
                for k in [0.4, 1.7] {
                    let a = expected_observable(&e, prep, k, ProbeAxis::X, model).unwrap();
                    let b = expected_observable_evolved(&e, prep, k, ProbeAxis::X, model).unwrap();
                    assert_abs_diff_eq!(a, b, epsilon = 1e-10);
                }
            }
        }
        let a = expected_observable(&e, SpinPrep::PlusY, 0.9, ProbeAxis::P, FidelityModel::AllOrder).unwrap();
        let b = expected_observable_evolved(&e, SpinPrep::PlusY, 0.9, ProbeAxis::P, FidelityModel::AllOrder).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-10);
    }

    #[test]
    fn momentum_probe_rejected_for_truncated_models() {
        let e = ground(20);
        for model in [FidelityModel::ThirdOrder, FidelityModel::XDiagonal] {
            let r = expected_observable(&e, SpinPrep::PlusZ, 1.0, ProbeAxis::P, model);
            assert!(matches!(r, Err(Error::UnsupportedQuadrature { .. })));
        }
    }

    #[test]
    fn noise_is_seeded_and_bounded() {
        let e = ground(30);
        let ks = default_k_grid();
        let a = simulate_scan(&e, SpinPrep::PlusZ, &ks, ProbeAxis::X, FidelityModel::LambDicke, 250, 7).unwrap();
        let b = simulate_scan(&e, SpinPrep::PlusZ, &ks, ProbeAxis::X, FidelityModel::LambDicke, 250, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.points.iter().all(|p| (-1.0..=1.0).contains(&p.estimate)));
    }

    #[test]
    fn ground_state_width_is_one() {
        let e = ground(40);
        let scan = exact_scan(&e, SpinPrep::PlusZ, &default_k_grid(), ProbeAxis::X, FidelityModel::LambDicke).unwrap();
        let w = width_from_curvature(&scan).unwrap();
        assert_abs_diff_eq!(w.width, 1.0, epsilon = 1e-9);
        assert!(w.monotone);
        assert_eq!(w.k_min, 0.0);
    }

    #[test]
    fn curvature_rejects_narrow_window() {
        let e = ground(40);
        let scan = exact_scan(&e, SpinPrep::PlusZ, &[0.0, 0.5, 1.0, 1.5, 2.0], ProbeAxis::X, FidelityModel::LambDicke).unwrap();
        assert!(matches!(width_from_curvature(&scan), Err(Error::CurvatureFit(_))));
    }

    #[test]
    fn rabi_fit_recovers_thermal_like_populations() {
        let p = HilbertParams::new(40, 0.06, 1).unwrap();
        let e = MotionalEnsemble::pure(p, coherent_state(C64::new(2.0, 0.0), &p).unwrap()).unwrap();
        let scan = carrier_rabi_scan(&e, &default_rabi_times(), CarrierScale::Bare, 0, 0).unwrap();
        let fit = fit_mean_phonon(&scan, Some(30), None).unwrap();
        assert!(fit.converged);
        assert_abs_diff_eq!(fit.mean_phonon, 4.0, epsilon = 0.05);
    }

    #[test]
    fn rabi_fit_needs_enough_times() {
        let e = ground(20);
        let scan = carrier_rabi_scan(&e, &[0.0, 1.0, 2.0], CarrierScale::Bare, 0, 0).unwrap();
        assert!(matches!(fit_mean_phonon(&scan, Some(5), None), Err(Error::IllConditioned(_))));
    }
}
