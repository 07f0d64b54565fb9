//! Laser-ion Hamiltonians and their propagators.
//!
//! Every Hamiltonian here factorizes as `S ⊗ M`: `S` is `scale * Σ_j σ_φ^(j)`
//! over the ions and `M` acts on the motional mode. Propagators are applied in
//! the joint eigenbasis, so one real symmetric eigendecomposition of the
//! motional generator serves every pulse of a given model.
//!
//! Bichromatic Hamiltonians are expressed in units of `ηΩ` (pulse area `ηΩt`),
//! carrier Hamiltonians in units of `Ω` (pulse area `Ωt`, a π/2 pulse has area π/2).

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{HilbertParams, SpinMotionState};
use crate::special::laguerre_sequence;
use crate::spin;

/// Level of approximation of the laser-ion coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityModel {
    /// First order in η: `x` couples neighbouring Fock levels with `sqrt(n+1)`.
    LambDicke,
    /// Resonant terms through third order in η.
    ThirdOrder,
    /// Third order with `n` replaced by a function of `x`, diagonal in position.
    XDiagonal,
    /// Exact sideband matrix elements `e^{-η²/2} L_n^1(η²) / sqrt(n+1)` (in units of η).
    AllOrder,
}

impl FidelityModel {
    pub const ALL: [FidelityModel; 4] = [Self::LambDicke, Self::ThirdOrder, Self::XDiagonal, Self::AllOrder];

    pub fn name(self) -> &'static str {
        match self {
            Self::LambDicke => "lamb_dicke",
            Self::ThirdOrder => "third_order",
            Self::XDiagonal => "x_diagonal",
            Self::AllOrder => "all_order",
        }
    }

    fn x_quadrature_only(self) -> bool {
        matches!(self, Self::ThirdOrder | Self::XDiagonal)
    }
}

impl fmt::Display for FidelityModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Normalization of the all-order carrier couplings `Ω_{n,n}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CarrierScale {
    /// `Ω_{n,n} = Ω_0 L_n(η²)`: the Debye-Waller factor is absorbed in `Ω_0`,
    /// so the ground state flops at exactly `Ω_0`.
    #[default]
    Bare,
    /// `Ω_{n,n} = Ω_0 e^{-η²/2} L_n(η²)`.
    DebyeWaller,
}

/// Reduces a phase to `[0, 2π)`.
pub fn reduce_phase(phase: f64) -> f64 {
    let r = phase.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Step size `d = 2ηΩτ` in units of `Δx` for a bichromatic pulse of Rabi
/// frequency `omega` (rad/s) and duration `tau` (s).
pub fn step_size_from_physical(eta: f64, omega: f64, tau: f64) -> f64 {
    2.0 * eta * omega * tau
}

// ---------------------------------------------------------------------------
// Motional generators

/// Real symmetric motional generator of the bichromatic coupling on the
/// x quadrature (`φ- = 0`), in units of `η`.
pub fn quadrature_generator(model: FidelityModel, n_max: usize, eta: f64) -> DMatrix<f64> {
    let d = n_max + 1;
    let mut x = DMatrix::zeros(d, d);
    for n in 0..n_max {
        let s = ((n + 1) as f64).sqrt();
        x[(n + 1, n)] = s;
        x[(n, n + 1)] = s;
    }
    let e2 = eta * eta;
    match model {
        FidelityModel::LambDicke => x,
        FidelityModel::ThirdOrder => {
            // x - (η²/4)(x n + n x + x): neighbour coupling sqrt(n+1) (1 - η²(n+1)/2)
            let mut m = DMatrix::zeros(d, d);
            for n in 0..n_max {
                let g = ((n + 1) as f64).sqrt() * (1.0 - 0.5 * e2 * (n + 1) as f64);
                m[(n + 1, n)] = g;
                m[(n, n + 1)] = g;
            }
            m
        }
        FidelityModel::XDiagonal => {
            // x (1 - (η²/8)(x² + 1))
            let x3 = &x * &x * &x;
            &x * (1.0 - e2 / 8.0) - x3 * (e2 / 8.0)
        }
        FidelityModel::AllOrder => {
            let dw = (-0.5 * e2).exp();
            let l1 = laguerre_sequence(n_max, 1.0, e2);
            let mut m = DMatrix::zeros(d, d);
            for n in 0..n_max {
                let g = dw * l1[n] / ((n + 1) as f64).sqrt();
                m[(n + 1, n)] = g;
                m[(n, n + 1)] = g;
            }
            m
        }
    }
}

/// Diagonal carrier couplings `Ω_{n,n} / Ω_0`.
pub fn carrier_couplings(model: FidelityModel, n_max: usize, eta: f64, scale: CarrierScale) -> Vec<f64> {
    match model {
        FidelityModel::AllOrder => {
            let dw = match scale {
                CarrierScale::Bare => 1.0,
                CarrierScale::DebyeWaller => (-0.5 * eta * eta).exp(),
            };
            laguerre_sequence(n_max, 0.0, eta * eta).into_iter().map(|l| dw * l).collect()
        }
        _ => vec![1.0; n_max + 1],
    }
}

/// Eigendecomposition `X = Q diag(λ) Qᵀ` of a real symmetric motional generator.
#[derive(Debug)]
pub struct MotionalSpectrum {
    generator: DMatrix<f64>,
    values: DVector<f64>,
    vectors: DMatrix<f64>,
}

impl MotionalSpectrum {
    pub fn new(generator: DMatrix<f64>) -> Self {
        let eig = generator.clone().symmetric_eigen();
        Self { generator, values: eig.eigenvalues, vectors: eig.eigenvectors }
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.values
    }

    /// `Qᵀ R(φ-)† v`: coordinates of `v` in the eigenbasis of `M(φ-) = R X R†`,
    /// with `R = diag(e^{i φ- n})`.
    pub fn to_eigenbasis(&self, phi_minus: f64, v: &DVector<C64>) -> DVector<C64> {
        let rotated = rotate(v, -phi_minus);
        let (re, im) = split(&rotated);
        let yr = self.vectors.tr_mul(&re);
        let yi = self.vectors.tr_mul(&im);
        DVector::from_fn(v.len(), |j, _| C64::new(yr[j], yi[j]))
    }

    fn to_fock_basis(&self, phi_minus: f64, y: &DVector<C64>) -> DVector<C64> {
        let (re, im) = split(y);
        let wr = &self.vectors * re;
        let wi = &self.vectors * im;
        let w = DVector::from_fn(y.len(), |j, _| C64::new(wr[j], wi[j]));
        rotate(&w, phi_minus)
    }

    /// `exp(-i c M(φ-)) v`.
    pub fn apply_exp(&self, c: f64, phi_minus: f64, v: &DVector<C64>) -> DVector<C64> {
        let mut y = self.to_eigenbasis(phi_minus, v);
        for (yj, &lam) in y.iter_mut().zip(self.values.iter()) {
            *yj *= C64::from_polar(1.0, -c * lam);
        }
        self.to_fock_basis(phi_minus, &y)
    }

    /// Dense `exp(-i c M(φ-))`.
    pub fn exp_matrix(&self, c: f64, phi_minus: f64) -> DMatrix<C64> {
        let d = self.values.len();
        let mut out = DMatrix::zeros(d, d);
        for col in 0..d {
            let mut e = DVector::zeros(d);
            e[col] = C64::new(1.0, 0.0);
            out.set_column(col, &self.apply_exp(c, phi_minus, &e));
        }
        out
    }

    /// Dense `M(φ-)`.
    pub fn operator(&self, phi_minus: f64) -> DMatrix<C64> {
        let d = self.generator.nrows();
        DMatrix::from_fn(d, d, |r, c| C64::from_polar(self.generator[(r, c)], phi_minus * (r as f64 - c as f64)))
    }
}

fn split(v: &DVector<C64>) -> (DVector<f64>, DVector<f64>) {
    (v.map(|c| c.re), v.map(|c| c.im))
}

/// `diag(e^{i phase n}) v`.
fn rotate(v: &DVector<C64>, phase: f64) -> DVector<C64> {
    if phase == 0.0 {
        return v.clone();
    }
    DVector::from_fn(v.len(), |n, _| v[n] * C64::from_polar(1.0, phase * n as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct SpectrumKey {
    model: FidelityModel,
    n_max: usize,
    eta_bits: u64,
}

type SpectrumCache = Mutex<HashMap<SpectrumKey, Arc<OnceLock<Arc<MotionalSpectrum>>>>>;

/// Process-wide cache of motional spectra: each key is diagonalized once and
/// then shared read-only between threads.
pub fn cached_spectrum(model: FidelityModel, n_max: usize, eta: f64) -> Arc<MotionalSpectrum> {
    static CACHE: OnceLock<SpectrumCache> = OnceLock::new();
    let eta_bits = if model == FidelityModel::LambDicke { 0 } else { eta.to_bits() };
    let key = SpectrumKey { model, n_max, eta_bits };
    let slot = {
        let mut map = CACHE.get_or_init(Default::default).lock().unwrap_or_else(|e| e.into_inner());
        map.entry(key).or_default().clone()
    };
    slot.get_or_init(|| Arc::new(MotionalSpectrum::new(quadrature_generator(model, n_max, eta)))).clone()
}

// ---------------------------------------------------------------------------
// Hamiltonians

#[derive(Debug, Clone)]
enum MotionFactor {
    Diagonal(Arc<Vec<f64>>),
    Quadrature { phi_minus: f64, spectrum: Arc<MotionalSpectrum> },
}

/// `scale * Σ_j σ_φ^(j) ⊗ M`.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    n_ions: usize,
    n_max: usize,
    spin_phase: f64,
    spin_scale: f64,
    motion: MotionFactor,
}

/// Bichromatic (red + blue sideband) Hamiltonian in units of `ηΩ`.
///
/// Spin factor `σ_x cos φ+ - σ_y sin φ+` (summed over ions), motional factor
/// `(a + a†) cos φ- + i(a† - a) sin φ-` at the requested fidelity.
pub fn bichromatic_hamiltonian(params: &HilbertParams, phi_plus: f64, phi_minus: f64, model: FidelityModel) -> Result<Hamiltonian> {
    params.validate()?;
    let phi_minus = reduce_phase(phi_minus);
    if model.x_quadrature_only() {
        let on_axis = phi_minus.abs() < 1e-12 || (phi_minus - PI).abs() < 1e-12 || (TAU - phi_minus).abs() < 1e-12;
        if !on_axis {
            return Err(Error::UnsupportedQuadrature { model: model.name(), phi_minus });
        }
    }
    Ok(Hamiltonian {
        n_ions: params.n_ions,
        n_max: params.n_max,
        spin_phase: reduce_phase(phi_plus),
        spin_scale: 1.0,
        motion: MotionFactor::Quadrature { phi_minus, spectrum: cached_spectrum(model, params.n_max, params.eta) },
    })
}

/// Carrier Hamiltonian `(1/2) Σ_j σ_φ^(j) ⊗ diag(Ω_{n,n}/Ω_0)` in units of `Ω_0`.
pub fn carrier_hamiltonian(params: &HilbertParams, phase: f64, model: FidelityModel, scale: CarrierScale) -> Result<Hamiltonian> {
    params.validate()?;
    Ok(Hamiltonian {
        n_ions: params.n_ions,
        n_max: params.n_max,
        spin_phase: reduce_phase(phase),
        spin_scale: 0.5,
        motion: MotionFactor::Diagonal(Arc::new(carrier_couplings(model, params.n_max, params.eta, scale))),
    })
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        (1 << self.n_ions) * (self.n_max + 1)
    }

    pub fn spin_phase(&self) -> f64 {
        self.spin_phase
    }

    /// Same motional factor with a different spin phase.
    pub fn with_spin_phase(&self, phase: f64) -> Self {
        Self { spin_phase: reduce_phase(phase), ..self.clone() }
    }

    /// `H(φ + π) = -H(φ)`.
    pub fn phase_flipped(&self) -> Self {
        self.with_spin_phase(self.spin_phase + PI)
    }

    pub fn spin_operator(&self) -> DMatrix<C64> {
        spin::collective(&spin::sigma_phi(self.spin_phase), self.n_ions) * C64::from(self.spin_scale)
    }

    pub fn motional_operator(&self) -> DMatrix<C64> {
        match &self.motion {
            MotionFactor::Diagonal(d) => DMatrix::from_diagonal(&DVector::from_iterator(d.len(), d.iter().map(|&v| C64::from(v)))),
            MotionFactor::Quadrature { phi_minus, spectrum } => spectrum.operator(*phi_minus),
        }
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        self.spin_operator().kronecker(&self.motional_operator())
    }

    /// Spin eigenvectors and eigenvalues of the spin factor.
    fn spin_eigen(&self) -> Vec<(DVector<C64>, f64)> {
        let single = spin::sigma_phi_eigenvectors(self.spin_phase);
        let lam = [1.0, -1.0];
        match self.n_ions {
            1 => (0..2).map(|a| (DVector::from_row_slice(&single[a]), self.spin_scale * lam[a])).collect(),
            _ => {
                let mut out = Vec::with_capacity(4);
                for a in 0..2 {
                    for b in 0..2 {
                        let v = DVector::from_row_slice(&single[a]).kronecker(&DVector::from_row_slice(&single[b]));
                        out.push((v, self.spin_scale * (lam[a] + lam[b])));
                    }
                }
                out
            }
        }
    }

    fn motion_exp(&self, c: f64, v: &DVector<C64>) -> DVector<C64> {
        if c == 0.0 {
            return v.clone();
        }
        match &self.motion {
            MotionFactor::Diagonal(d) => DVector::from_fn(v.len(), |n, _| v[n] * C64::from_polar(1.0, -c * d[n])),
            MotionFactor::Quadrature { phi_minus, spectrum } => spectrum.apply_exp(c, *phi_minus, v),
        }
    }

    fn motion_exp_matrix(&self, c: f64) -> DMatrix<C64> {
        match &self.motion {
            MotionFactor::Diagonal(d) => {
                DMatrix::from_diagonal(&DVector::from_iterator(d.len(), d.iter().map(|&v| C64::from_polar(1.0, -c * v))))
            }
            MotionFactor::Quadrature { phi_minus, spectrum } => spectrum.exp_matrix(c, *phi_minus),
        }
    }

    pub fn propagator(&self, area: f64) -> Propagator {
        Propagator { hamiltonian: self.clone(), area }
    }

    fn check_compatible(&self, params: &HilbertParams) -> Result<()> {
        if params.n_ions != self.n_ions || params.n_max != self.n_max {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: params.dim() });
        }
        Ok(())
    }
}

/// `exp(-i area H) |state>`.
pub fn evolve(state: &SpinMotionState, h: &Hamiltonian, area: f64) -> Result<SpinMotionState> {
    let params = *state.params();
    h.check_compatible(&params)?;
    let ns = params.spin_dim();
    let d = params.motional_dim();
    let blocks: Vec<DVector<C64>> = (0..ns).map(|s| state.spin_block(s)).collect();
    let mut out = vec![DVector::<C64>::zeros(d); ns];
    for (v, lam) in h.spin_eigen() {
        let mut m = DVector::<C64>::zeros(d);
        for s in 0..ns {
            m.axpy(v[s].conj(), &blocks[s], C64::new(1.0, 0.0));
        }
        let m = h.motion_exp(area * lam, &m);
        for s in 0..ns {
            out[s].axpy(v[s], &m, C64::new(1.0, 0.0));
        }
    }
    let next = SpinMotionState::from_blocks_unchecked(params, &out, state.leakage_allowed());
    next.check_tail(None)?;
    Ok(next)
}

/// Largest entry of `|H - H†|`.
pub fn hermiticity_defect(h: &DMatrix<C64>) -> f64 {
    (h - h.adjoint()).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// `exp(-i area H)` for an arbitrary dense Hermitian matrix.
pub fn dense_propagator(h: &DMatrix<C64>, area: f64) -> Result<DMatrix<C64>> {
    let deviation = hermiticity_defect(h);
    if deviation > 1e-10 {
        return Err(Error::NotHermitian { deviation });
    }
    let eig = h.clone().symmetric_eigen();
    let phases = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -area * l)));
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&phases) * v.adjoint())
}

/// [`evolve`] for an arbitrary dense Hermitian matrix on the joint space.
pub fn evolve_dense(state: &SpinMotionState, h: &DMatrix<C64>, area: f64) -> Result<SpinMotionState> {
    if h.nrows() != state.params().dim() {
        return Err(Error::DimensionMismatch { expected: state.params().dim(), got: h.nrows() });
    }
    let u = dense_propagator(h, area)?;
    let next = SpinMotionState::from_amplitudes_unchecked(*state.params(), u * state.amplitudes(), state.leakage_allowed());
    next.check_tail(None)?;
    Ok(next)
}

/// A Hamiltonian together with a pulse area.
#[derive(Debug, Clone)]
pub struct Propagator {
    hamiltonian: Hamiltonian,
    area: f64,
}

impl Propagator {
    pub fn apply(&self, state: &SpinMotionState) -> Result<SpinMotionState> {
        evolve(state, &self.hamiltonian, self.area)
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.hamiltonian
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    /// Exact inverse, realized as the same pulse with its spin phase shifted by π.
    pub fn inverse(&self) -> Propagator {
        Propagator { hamiltonian: self.hamiltonian.phase_flipped(), area: self.area }
    }

    /// Dense unitary on the joint space.
    pub fn matrix(&self) -> DMatrix<C64> {
        let h = &self.hamiltonian;
        let mut u = DMatrix::zeros(h.dim(), h.dim());
        for (v, lam) in h.spin_eigen() {
            let proj = &v * v.adjoint();
            u += proj.kronecker(&h.motion_exp_matrix(self.area * lam));
        }
        u
    }
}

/// `U_d`: bichromatic pulse at `φ- = π/2` with area `d/2`, which displaces a
/// `σ_φ = +1` eigenstate of one ion by `+d` along x.
pub fn displacement_propagator(d: f64, params: &HilbertParams, phi_plus: f64, model: FidelityModel) -> Result<Propagator> {
    if !d.is_finite() {
        return Err(Error::InvalidParameter(format!("step size must be finite, got {d}")));
    }
    Ok(bichromatic_hamiltonian(params, phi_plus, FRAC_PI_2, model)?.propagator(d / 2.0))
}

/// Which kind of laser pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseKind {
    Bichromatic { phi_plus: f64, phi_minus: f64 },
    Carrier { phase: f64 },
}

/// One laser pulse: kind, phases, dimensionless area and coupling model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub kind: PulseKind,
    /// `ηΩt` for bichromatic pulses, `Ωt` for carrier pulses.
    pub area: f64,
    pub model: FidelityModel,
    #[serde(default)]
    pub carrier_scale: CarrierScale,
}

impl PulseSpec {
    pub fn bichromatic(phi_plus: f64, phi_minus: f64, area: f64, model: FidelityModel) -> Result<Self> {
        Self::checked(PulseKind::Bichromatic { phi_plus: reduce_phase(phi_plus), phi_minus: reduce_phase(phi_minus) }, area, model)
    }

    pub fn carrier(phase: f64, area: f64, model: FidelityModel) -> Result<Self> {
        Self::checked(PulseKind::Carrier { phase: reduce_phase(phase) }, area, model)
    }

    /// Bichromatic pulse from a Rabi frequency (rad/s), Lamb-Dicke parameter and duration (s).
    pub fn bichromatic_physical(omega: f64, eta: f64, tau: f64, phi_plus: f64, phi_minus: f64, model: FidelityModel) -> Result<Self> {
        if tau < 0.0 {
            return Err(Error::InvalidParameter(format!("pulse duration must be non-negative, got {tau}")));
        }
        Self::bichromatic(phi_plus, phi_minus, eta * omega * tau, model)
    }

    pub fn carrier_physical(omega: f64, tau: f64, phase: f64, model: FidelityModel) -> Result<Self> {
        if tau < 0.0 {
            return Err(Error::InvalidParameter(format!("pulse duration must be non-negative, got {tau}")));
        }
        Self::carrier(phase, omega * tau, model)
    }

    fn checked(kind: PulseKind, area: f64, model: FidelityModel) -> Result<Self> {
        if !(area >= 0.0 && area.is_finite()) {
            return Err(Error::InvalidParameter(format!("pulse area must be non-negative, got {area}")));
        }
        Ok(Self { kind, area, model, carrier_scale: CarrierScale::default() })
    }

    pub fn hamiltonian(&self, params: &HilbertParams) -> Result<Hamiltonian> {
        match self.kind {
            PulseKind::Bichromatic { phi_plus, phi_minus } => bichromatic_hamiltonian(params, phi_plus, phi_minus, self.model),
            PulseKind::Carrier { phase } => carrier_hamiltonian(params, phase, self.model, self.carrier_scale),
        }
    }

    pub fn propagator(&self, params: &HilbertParams) -> Result<Propagator> {
        Ok(self.hamiltonian(params)?.propagator(self.area))
    }
}
