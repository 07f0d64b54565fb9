use std::f64::consts::{FRAC_PI_2, PI};

use ionwalk::dynamics::{
    bichromatic_hamiltonian, carrier_hamiltonian, evolve, hermiticity_defect, CarrierScale, FidelityModel, Hamiltonian,
};
use ionwalk::fock::{coherent_state, exact_position_density, HilbertParams, MotionalEnsemble, SpinMotionState};
use ionwalk::grid::PositionGrid;
use ionwalk::probe::{expected_observable, simulate_scan, ProbeAxis, SpinPrep};
use ionwalk::reconstruct::fisher_functional;
use ionwalk::C64;
use nalgebra::DVector;
use proptest::prelude::*;

const ETA: f64 = 0.06;

fn model_strategy() -> impl Strategy<Value = FidelityModel> {
    prop::sample::select(FidelityModel::ALL.to_vec())
}

/// A phase valid for every model on the x quadrature.
fn hamiltonian(params: &HilbertParams, model: FidelityModel, phi_plus: f64, momentum: bool, carrier: bool) -> Hamiltonian {
    if carrier {
        carrier_hamiltonian(params, phi_plus, model, CarrierScale::Bare).unwrap()
    } else {
        let phi_minus = match model {
            FidelityModel::ThirdOrder | FidelityModel::XDiagonal => 0.0,
            _ if momentum => FRAC_PI_2,
            _ => 0.0,
        };
        bichromatic_hamiltonian(params, phi_plus, phi_minus, model).unwrap()
    }
}

fn random_state(params: HilbertParams, re: &[f64], im: &[f64]) -> SpinMotionState {
    // populate only low Fock levels so the truncation guard is not involved
    let d = params.motional_dim();
    let mut amps = DVector::<C64>::zeros(params.dim());
    for (j, (r, i)) in re.iter().zip(im).enumerate() {
        let s = j % params.spin_dim();
        let n = j / params.spin_dim();
        amps[s * d + n] = C64::new(*r, *i);
    }
    let norm = amps.norm();
    SpinMotionState::new(params, amps.unscale(norm)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn evolution_preserves_norm(
        model in model_strategy(),
        n_ions in 1usize..=2,
        re in prop::collection::vec(-1.0f64..1.0, 16),
        im in prop::collection::vec(-1.0f64..1.0, 16),
        phi in 0.0f64..(2.0 * PI),
        area in -2.0f64..2.0,
        momentum in any::<bool>(),
        carrier in any::<bool>(),
    ) {
        let params = HilbertParams::new(60, ETA, n_ions).unwrap();
        let state = random_state(params, &re, &im);
        let h = hamiltonian(&params, model, phi, momentum, carrier);
        let out = evolve(&state, &h, area).unwrap();
        prop_assert!((out.norm() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn hamiltonians_are_hermitian(
        model in model_strategy(),
        n_ions in 1usize..=2,
        phi in 0.0f64..(2.0 * PI),
        momentum in any::<bool>(),
        carrier in any::<bool>(),
    ) {
        let params = HilbertParams::new(12, ETA, n_ions).unwrap();
        let h = hamiltonian(&params, model, phi, momentum, carrier);
        prop_assert!(hermiticity_defect(&h.to_dense()) <= 1e-12);
    }

    #[test]
    fn phase_shift_by_pi_inverts_the_pulse(
        model in model_strategy(),
        phi in 0.0f64..(2.0 * PI),
        area in -2.0f64..2.0,
        momentum in any::<bool>(),
        carrier in any::<bool>(),
    ) {
        let params = HilbertParams::new(10, ETA, 1).unwrap();
        let h = hamiltonian(&params, model, phi, momentum, carrier);
        let forward = h.propagator(area).matrix();
        let flipped = h.with_spin_phase(h.spin_phase() + PI).propagator(area).matrix();
        prop_assert!((flipped - forward.adjoint()).camax() <= 1e-10);
    }

    #[test]
    fn fisher_functional_is_midpoint_convex(
        a in prop::collection::vec(0.0f64..1.0, 41),
        b in prop::collection::vec(0.0f64..1.0, 41),
    ) {
        let grid = PositionGrid::new(2.0, 0.1).unwrap();
        let norm = |v: &[f64]| {
            let s = grid.integrate(v);
            v.iter().map(|x| x / s).collect::<Vec<f64>>()
        };
        prop_assume!(a.iter().sum::<f64>() > 1e-3 && b.iter().sum::<f64>() > 1e-3);
        let (p, q) = (norm(&a), norm(&b));
        let mid: Vec<f64> = p.iter().zip(&q).map(|(x, y)| (x + y) / 2.0).collect();
        let fp = fisher_functional(&grid, &p);
        let fq = fisher_functional(&grid, &q);
        prop_assert!(fisher_functional(&grid, &mid) <= (fp + fq) / 2.0 + 1e-9 * (1.0 + fp + fq));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn density_fourier_transform_matches_probe(
        a_re in -1.5f64..1.5,
        a_im in -1.0f64..1.0,
        b_re in -1.5f64..1.5,
        w in 0.1f64..0.9,
        k in 0.0f64..3.0,
    ) {
        let params = HilbertParams::new(60, ETA, 1).unwrap();
        let ca = coherent_state(C64::new(a_re, a_im), &params).unwrap();
        let cb = coherent_state(C64::new(b_re, 0.0), &params).unwrap();
        let sup = &ca + &cb;
        let sup = sup.unscale(sup.norm());
        let ens = MotionalEnsemble::new(params, vec![
            ionwalk::fock::EnsembleMember { weight: w, state: sup },
            ionwalk::fock::EnsembleMember { weight: 1.0 - w, state: ca },
        ]).unwrap();
        let grid = PositionGrid::new(14.0, 0.02).unwrap();
        let rho = exact_position_density(&ens, &grid).unwrap();
        let c: f64 = grid.points().iter().zip(&rho).map(|(x, p)| (k * x).cos() * p).sum::<f64>() * grid.spacing();
        let s: f64 = grid.points().iter().zip(&rho).map(|(x, p)| (k * x).sin() * p).sum::<f64>() * grid.spacing();
        let ec = expected_observable(&ens, SpinPrep::PlusZ, k, ProbeAxis::X, FidelityModel::LambDicke).unwrap();
        let es = expected_observable(&ens, SpinPrep::PlusY, k, ProbeAxis::X, FidelityModel::LambDicke).unwrap();
        prop_assert!((c - ec).abs() <= 1e-6);
        prop_assert!((s - es).abs() <= 1e-6);
    }
}

#[test]
fn shot_noise_spread_matches_binomial() {
    let params = HilbertParams::new(40, ETA, 1).unwrap();
    let ens = MotionalEnsemble::pure(params, coherent_state(C64::new(0.5, 0.0), &params).unwrap()).unwrap();
    let ks = [0.3, 0.9, 1.6, 2.4];
    let shots = 250;
    let samples: Vec<Vec<f64>> = (0..100)
        .map(|seed| simulate_scan(&ens, SpinPrep::PlusZ, &ks, ProbeAxis::X, FidelityModel::LambDicke, shots, seed).unwrap().estimates())
        .collect();
    for (j, &k) in ks.iter().enumerate() {
        let o = expected_observable(&ens, SpinPrep::PlusZ, k, ProbeAxis::X, FidelityModel::LambDicke).unwrap();
        let values: Vec<f64> = samples.iter().map(|s| s[j]).collect();
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt();
        let expected = ((1.0 - o * o) / shots as f64).sqrt();
        assert!((sd / expected - 1.0).abs() <= 0.15, "k = {k}: sd {sd} vs {expected}");
    }
}

#[test]
fn model_disagreement_grows_with_phonon_number() {
    let params = HilbertParams::new(200, ETA, 1).unwrap();
    let ld = bichromatic_hamiltonian(&params, 0.0, 0.0, FidelityModel::LambDicke).unwrap();
    let ao = bichromatic_hamiltonian(&params, 0.0, 0.0, FidelityModel::AllOrder).unwrap();
    let spin = ionwalk::spin::plus_z();
    let mut last = 0.0;
    for alpha in [1.0, 3.0, 6.0, 10.0] {
        let motion = coherent_state(C64::new(alpha, 0.0), &params).unwrap();
        let state = SpinMotionState::product(params, &DVector::from_row_slice(&spin), &motion).unwrap();
        let a = evolve(&state, &ld, 1.0).unwrap();
        let b = evolve(&state, &ao, 1.0).unwrap();
        let diff = (a.amplitudes() - b.amplitudes()).norm();
        assert!(diff > last, "alpha = {alpha}: {diff} <= {last}");
        last = diff;
    }
}

#[test]
fn low_phonon_states_see_nearly_the_same_pulse_in_every_model() {
    let params = HilbertParams::new(60, ETA, 1).unwrap();
    let spin = DVector::from_row_slice(&ionwalk::spin::plus_z());
    let bound = 5.0 * ETA * ETA;
    for nbar in [0.5f64, 1.0, 3.0, 5.0] {
        let motion = coherent_state(C64::new(nbar.sqrt(), 0.0), &params).unwrap();
        let state = SpinMotionState::product(params, &spin, &motion).unwrap();
        let outs: Vec<SpinMotionState> = FidelityModel::ALL
            .iter()
            .map(|&m| evolve(&state, &bichromatic_hamiltonian(&params, 0.0, 0.0, m).unwrap(), 1.0).unwrap())
            .collect();
        for i in 0..4 {
            for j in (i + 1)..4 {
                let diff = (outs[i].amplitudes() - outs[j].amplitudes()).norm();
                // the uncorrected model deviates at first order in η²<n>
                let allowed = if i == 0 { bound * nbar.max(1.0) } else { bound };
                assert!(diff <= allowed, "<n> = {nbar}, models {i}/{j}: {diff}");
            }
        }
    }
}
