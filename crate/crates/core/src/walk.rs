//! Quantum, phase-randomized, reversed and two-ion walks.
//!
//! One step is the state-dependent displacement followed by the coin, i.e.
//! `(U_i U_d)^N` applied right to left. The displacement is a bichromatic
//! pulse at `φ- = π/2`; the coin is a carrier π/2 pulse whose spin axis is
//! rotated by [`COIN_AXIS_OFFSET`] from the displacement axis, so with the
//! default `coin_phase = 0` it rotates about σ_y while the walker moves along
//! the σ_x eigenbasis.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::DVector;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{bichromatic_hamiltonian, carrier_hamiltonian, evolve, CarrierScale, FidelityModel, Hamiltonian};
use crate::error::{Error, Result};
use crate::fock::{EnsembleMember, HilbertParams, MotionalEnsemble, SpinMotionState};
use crate::grid::PositionGrid;
use crate::probe::SpinPrep;

/// Spin-phase offset of the coin relative to the displacement axis.
pub const COIN_AXIS_OFFSET: f64 = -FRAC_PI_2;

/// Carrier area of the coin pulse.
pub const COIN_AREA: f64 = FRAC_PI_2;

pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_SEED: u64 = 20100406;

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    pub n_steps: usize,
    /// Outer displacement per step in units of Δx: `|+>_x` (one ion) or
    /// `|++>_x` (two ions) moves by `+step_size`.
    pub step_size: f64,
    pub model: FidelityModel,
    pub params: HilbertParams,
    #[serde(default)]
    pub coin_phase: f64,
    #[serde(default)]
    pub carrier_scale: CarrierScale,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_trials")]
    pub trials: usize,
}

impl WalkConfig {
    /// Walk with the default step (2 Δx for one ion, 4 Δx outer step for two)
    /// and default truncation for `n_steps`.
    pub fn new(n_steps: usize, n_ions: usize, eta: f64, model: FidelityModel) -> Result<Self> {
        let params = HilbertParams::new(Self::default_n_max(n_steps), eta, n_ions)?;
        Ok(Self {
            n_steps,
            step_size: 2.0 * n_ions as f64,
            model,
            params,
            coin_phase: 0.0,
            carrier_scale: CarrierScale::default(),
            seed: DEFAULT_SEED,
            trials: DEFAULT_TRIALS,
        })
    }

    pub fn default_n_max(n_steps: usize) -> usize {
        if n_steps <= 10 {
            256
        } else {
            800
        }
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.params.n_max = n_max;
        self
    }

    pub fn with_step_size(mut self, step_size: f64) -> Self {
        self.step_size = step_size;
        self
    }

    pub fn with_trials(mut self, trials: usize, seed: u64) -> Self {
        self.trials = trials;
        self.seed = seed;
        self
    }

    /// Bichromatic pulse area per step: a collective spin eigenvalue of
    /// `±n_ions` moves the packet by `±step_size`.
    pub fn pulse_area(&self) -> f64 {
        self.step_size / (2.0 * self.params.n_ions as f64)
    }

    /// Coherent amplitude of the outermost branch, `step_size * n_steps / 2`.
    pub fn edge_amplitude(&self) -> f64 {
        self.step_size.abs() * self.n_steps as f64 / 2.0
    }

    /// Conservative truncation estimate `(α + 3 sqrt α)²` with α the edge amplitude.
    pub fn recommended_n_max(&self) -> f64 {
        let a = self.edge_amplitude();
        (a + 3.0 * a.sqrt()).powi(2)
    }

    /// Hard requirement: the outermost coherent branch fits, `n_max > α² + 6α`.
    pub fn required_n_max(&self) -> f64 {
        let a = self.edge_amplitude();
        a * a + 6.0 * a
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if !self.step_size.is_finite() {
            return Err(Error::InvalidParameter("step_size must be finite".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkKind {
    Quantum,
    Reversed,
    Classical,
}

#[derive(Debug, Clone)]
pub enum Snapshots {
    Pure(Vec<SpinMotionState>),
    Mixed(Vec<MotionalEnsemble>),
}

/// Per-step snapshots; index 0 is the initial state.
#[derive(Debug, Clone)]
pub struct WalkResult {
    pub config: WalkConfig,
    pub kind: WalkKind,
    pub snapshots: Snapshots,
}

impl WalkResult {
    pub fn len(&self) -> usize {
        match &self.snapshots {
            Snapshots::Pure(v) => v.len(),
            Snapshots::Mixed(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn pure_states(&self) -> Option<&[SpinMotionState]> {
        match &self.snapshots {
            Snapshots::Pure(v) => Some(v),
            Snapshots::Mixed(_) => None,
        }
    }

    /// Motional ensemble of snapshot `i` (after ideal spin recombination for pure snapshots).
    pub fn ensemble(&self, i: usize) -> Result<MotionalEnsemble> {
        match &self.snapshots {
            Snapshots::Pure(v) => Ok(recombine_spin(&v[i], SpinPrep::PlusZ)?.ensemble),
            Snapshots::Mixed(v) => Ok(v[i].clone()),
        }
    }

    pub fn ensembles(&self) -> Result<Vec<MotionalEnsemble>> {
        (0..self.len()).map(|i| self.ensemble(i)).collect()
    }

    /// `|<Ψ_0|Ψ_final>|²` for pure-state walks.
    pub fn return_fidelity(&self) -> Option<f64> {
        let states = self.pure_states()?;
        Some(states.first()?.fidelity(states.last()?))
    }
}

struct StepPulses {
    displacement: Hamiltonian,
    coin: Hamiltonian,
    displacement_area: f64,
    coin_phase: f64,
}

impl StepPulses {
    fn new(config: &WalkConfig) -> Result<Self> {
        Ok(Self {
            displacement: bichromatic_hamiltonian(&config.params, 0.0, FRAC_PI_2, config.model)?,
            coin: carrier_hamiltonian(&config.params, 0.0, config.model, config.carrier_scale)?,
            displacement_area: config.pulse_area(),
            coin_phase: config.coin_phase,
        })
    }

    /// Coin after displacement, both spin phases offset by `phase`.
    fn forward(&self, state: &SpinMotionState, phase: f64, step: usize) -> Result<SpinMotionState> {
        let d = self.displacement.with_spin_phase(phase);
        let c = self.coin.with_spin_phase(phase + COIN_AXIS_OFFSET + self.coin_phase);
        let s = evolve(state, &d, self.displacement_area).map_err(|e| at_step(e, step))?;
        evolve(&s, &c, COIN_AREA).map_err(|e| at_step(e, step))
    }

    /// Exact inverse of [`Self::forward`]: coin then displacement, phases shifted by π.
    fn backward(&self, state: &SpinMotionState, phase: f64, step: usize) -> Result<SpinMotionState> {
        let d = self.displacement.with_spin_phase(phase).phase_flipped();
        let c = self.coin.with_spin_phase(phase + COIN_AXIS_OFFSET + self.coin_phase).phase_flipped();
        let s = evolve(state, &c, COIN_AREA).map_err(|e| at_step(e, step))?;
        evolve(&s, &d, self.displacement_area).map_err(|e| at_step(e, step))
    }
}

fn at_step(e: Error, step: usize) -> Error {
    match e {
        Error::Leaky { tail, .. } => Error::Leaky { tail, step: Some(step) },
        other => other,
    }
}

/// Motional ground state with every spin in `|+>_y`, prepared by a carrier
/// π/2 pulse on `|->_z` at the requested fidelity.
pub fn prepare_initial(params: &HilbertParams, model: FidelityModel, scale: CarrierScale) -> Result<SpinMotionState> {
    let ground = SpinMotionState::ground(*params)?;
    let h = carrier_hamiltonian(params, 0.0, model, scale)?;
    evolve(&ground, &h, FRAC_PI_2)
}

/// Coherent walk `(U_i U_d)^N |Ψ_0>`.
pub fn quantum_walk(config: &WalkConfig) -> Result<WalkResult> {
    config.validate()?;
    let pulses = StepPulses::new(config)?;
    let mut states = Vec::with_capacity(config.n_steps + 1);
    states.push(prepare_initial(&config.params, config.model, config.carrier_scale)?);
    for step in 1..=config.n_steps {
        let next = pulses.forward(states.last().unwrap(), 0.0, step)?;
        states.push(next);
    }
    Ok(WalkResult { config: config.clone(), kind: WalkKind::Quantum, snapshots: Snapshots::Pure(states) })
}

/// `N` forward steps followed by the exact inverse sequence; `2N + 1` snapshots.
pub fn reversed_walk(config: &WalkConfig) -> Result<WalkResult> {
    let mut result = quantum_walk(config)?;
    let pulses = StepPulses::new(config)?;
    if let Snapshots::Pure(states) = &mut result.snapshots {
        for j in 0..config.n_steps {
            let next = pulses.backward(states.last().unwrap(), 0.0, config.n_steps + j + 1)?;
            states.push(next);
        }
    }
    result.kind = WalkKind::Reversed;
    Ok(result)
}

/// Walk on two ions sharing the center-of-mass mode.
pub fn two_ion_walk(config: &WalkConfig) -> Result<WalkResult> {
    if config.params.n_ions != 2 {
        return Err(Error::InvalidParameter(format!("two-ion walk requires n_ions = 2, got {}", config.params.n_ions)));
    }
    quantum_walk(config)
}

/// Seeded generator for classical-walk trial `trial`, independent of scheduling.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

/// Walk with an independent uniformly random spin phase per step and trial,
/// shared by that step's displacement and coin. Snapshots are the uniform
/// mixture over trials.
pub fn classical_walk(config: &WalkConfig) -> Result<WalkResult> {
    config.validate()?;
    let pulses = StepPulses::new(config)?;
    let initial = prepare_initial(&config.params, config.model, config.carrier_scale)?;
    let per_trial: Vec<Vec<Vec<EnsembleMember>>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| -> Result<Vec<Vec<EnsembleMember>>> {
            let mut rng = trial_rng(config.seed, trial);
            let mut state = initial.clone();
            let mut out = Vec::with_capacity(config.n_steps + 1);
            out.push(branches(&state));
            for step in 1..=config.n_steps {
                let phase = rng.random_range(0.0..TAU);
                state = pulses.forward(&state, phase, step)?;
                out.push(branches(&state));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let w = 1.0 / config.trials as f64;
    let snapshots = (0..=config.n_steps)
        .map(|step| {
            let members = per_trial
                .iter()
                .flat_map(|t| t[step].iter().map(|m| EnsembleMember { weight: m.weight * w, state: m.state.clone() }))
                .collect();
            MotionalEnsemble::new(config.params, members)
        })
        .collect::<Result<_>>()?;
    Ok(WalkResult { config: config.clone(), kind: WalkKind::Classical, snapshots: Snapshots::Mixed(snapshots) })
}

/// Normalized motional branches of each z-basis spin component.
fn branches(state: &SpinMotionState) -> Vec<EnsembleMember> {
    (0..state.params().spin_dim())
        .filter_map(|s| {
            let b = state.spin_block(s);
            let w = b.norm_squared();
            (w > 1e-15).then(|| EnsembleMember { weight: w, state: b.unscale(w.sqrt()) })
        })
        .collect()
}

/// Motional state after incoherent spin recombination, with the spin reset.
#[derive(Debug, Clone)]
pub struct Recombined {
    pub ensemble: MotionalEnsemble,
    pub spin: SpinPrep,
}

/// Moves all spin population to one internal state without touching the
/// motion: the result is the mixture of the z-basis spin branches weighted by
/// their populations, with the spin freshly prepared in `new_spin`.
pub fn recombine_spin(state: &SpinMotionState, new_spin: SpinPrep) -> Result<Recombined> {
    let mut members = branches(state);
    let total: f64 = members.iter().map(|m| m.weight).sum();
    for m in &mut members {
        m.weight /= total;
    }
    Ok(Recombined { ensemble: MotionalEnsemble::new(*state.params(), members)?, spin: new_spin })
}

/// Width of a fully dephased walk with step `s` after `n` steps, including the
/// initial packet: `sqrt(2 s² N / π + 1)` in units of Δx.
pub fn classical_width_reference(step: f64, n_steps: usize) -> f64 {
    (2.0 * step * step * n_steps as f64 / std::f64::consts::PI + 1.0).sqrt()
}

/// Width summary of one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WidthSummary {
    /// `sqrt <x²>` in Δx.
    pub rms_x: f64,
    /// `<|x|>` in Δx, from the exact density.
    pub mean_abs_x: f64,
    /// `2 sqrt <π²>`: momentum width in Δp.
    pub w_p: f64,
    pub nbar: f64,
}

pub fn width_summary(ensemble: &MotionalEnsemble, grid: &PositionGrid) -> Result<WidthSummary> {
    let density = crate::fock::exact_position_density(ensemble, grid)?;
    let mean_abs_x = grid.points().iter().zip(&density).map(|(x, p)| x.abs() * p).sum::<f64>() * grid.spacing();
    Ok(WidthSummary {
        rms_x: ensemble.x_second_moment().sqrt(),
        mean_abs_x,
        w_p: 2.0 * ensemble.pi_second_moment().sqrt(),
        nbar: ensemble.mean_phonon(),
    })
}

/// `|<Ψ|Φ>|²` between a state and a product of a spinor with a motional vector.
pub fn overlap_with_product(state: &SpinMotionState, spin: &DVector<C64>, motion: &DVector<C64>) -> f64 {
    state.amplitudes().dotc(&spin.kronecker(motion)).norm_sqr()
}
