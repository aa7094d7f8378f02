use casimir_core::couplings::effective_matrix_elements;
use casimir_core::decoherence::{
    cat_moments, decoherence_time, ideal_piecewise_entropy, linear_entropy_general, linear_entropy_resonant, EntropyOptions,
    ResonantEntropyOptions, COHERENCE_CC,
};
use casimir_core::kinetics::{PAIR_CC, PAIR_CR, SCATTER_CC, SCATTER_CR};
use casimir_core::{
    CasimirError, CouplingModel, EffectiveCouplings, ModeState, MomentMode, MotionLaw, OverlapMethod, PairSelection,
    ResonantState, SpectrumSolver, StateDescriptor, SystemConfig,
};
use num_complex::Complex64;

fn couplings(gamma: f64) -> EffectiveCouplings {
    let cfg = SystemConfig { gamma, k_c: 8, ..SystemConfig::default() };
    effective_matrix_elements(&SpectrumSolver::exact(cfg), OverlapMethod::Analytic).unwrap()
}

fn cat(a2: f64) -> ResonantState {
    ResonantState::Cat { alpha: Complex64::new(a2.sqrt(), 0.0), moments: MomentMode::Coherent }
}

fn closed(p: f64, tau: f64, state: &ResonantState, c: &EffectiveCouplings) -> f64 {
    linear_entropy_resonant(1, p, tau, state, c, &ResonantEntropyOptions::default()).unwrap().s
}

#[test]
fn cat_moment_sets() {
    let zero = cat_moments(Complex64::new(0.0, 0.0), MomentMode::ExactCat).unwrap();
    assert!(zero.mean_n.abs() < 1e-15 && zero.mean_a2.norm() < 1e-15);
    assert!((zero.purity - 1.0).abs() < 1e-15);
    for alpha in [Complex64::new(0.3, 0.0), Complex64::new(1.0, 1.0), Complex64::new(0.0, 2.0)] {
        assert!(cat_moments(alpha, MomentMode::ExactCat).unwrap().mean_a.norm() < 1e-13);
    }
    let two = cat_moments(Complex64::new(2.0_f64.sqrt(), 0.0), MomentMode::ExactCat).unwrap();
    assert!((two.mean_n - 1.928).abs() < 1e-3);
    let coherent = cat_moments(Complex64::new(2.0_f64.sqrt(), 0.0), MomentMode::Coherent).unwrap();
    assert!((coherent.m1 - 2.0).abs() < 1e-14);
    assert!((coherent.m2 - 3.0).abs() < 1e-14);
}

#[test]
fn closed_form_examples_at_the_fundamental_and_second_harmonic() {
    let c = couplings(1e4);
    let (m12, m13) = (c.m_cc[(0, 1)], c.m_cc[(0, 2)]);
    for (a2, tau) in [(2.0, 0.1), (0.5, 0.3)] {
        let s1 = closed(1.0, tau, &cat(a2), &c);
        assert!((s1 - 9.0 / 4.0 * tau * tau * a2 * m12 * m12).abs() < 1e-14);
        let s2 = closed(2.0, tau, &cat(a2), &c);
        assert!((s2 - 32.0 / 3.0 * tau * tau * a2 * m13 * m13).abs() < 1e-14);
    }
}

#[test]
fn piecewise_ideal_entropy() {
    let tau: f64 = 0.4;
    assert!((ideal_piecewise_entropy(3, tau, 2.0).unwrap() - 7.0 * tau * tau).abs() < 1e-15);
    assert_eq!(ideal_piecewise_entropy(1, 1.0, 2.0).unwrap(), 2.0);
    assert_eq!(ideal_piecewise_entropy(2, 1.0, 2.0).unwrap(), 3.0);
    assert!(matches!(ideal_piecewise_entropy(0, 1.0, 2.0), Err(CasimirError::NoResonance { .. })));
    // Linear growth in p beyond the second harmonic.
    let d: Vec<f64> = (3..8).map(|p| ideal_piecewise_entropy(p, 1.0, 2.0).unwrap()).collect();
    assert!(d.windows(3).all(|w| ((w[2] - w[1]) - (w[1] - w[0])).abs() < 1e-14));
}

#[test]
fn closed_form_is_a_global_multiple_of_the_piecewise_table() {
    let c = couplings(1e9);
    let perfect = couplings(f64::INFINITY);
    let opts = ResonantEntropyOptions { ideal_fast_path: true, ..Default::default() };
    let mut factors = Vec::new();
    for p in 1..=6 {
        let s = closed(p as f64, 0.2, &cat(2.0), &c);
        let fast = linear_entropy_resonant(1, p as f64, 0.2, &cat(2.0), &perfect, &opts).unwrap().s;
        assert!((fast - ideal_piecewise_entropy(p, 0.2, 2.0).unwrap()).abs() < 1e-15);
        factors.push(s / fast);
    }
    for f in &factors {
        assert!((f / factors[0] - 1.0).abs() < 1e-5, "{factors:?}");
    }
}

#[test]
fn ideal_decoherence_time_at_the_fundamental() {
    let c = couplings(1e9);
    for a2 in [0.5_f64, 2.0, 8.0] {
        let alpha = Complex64::new(a2.sqrt(), 0.0);
        let d = decoherence_time(1, 1.0, alpha, MomentMode::Coherent, &c, &Default::default()).unwrap();
        assert!((d.tau_d * a2.sqrt() * c.m_cc[(0, 1)] - 2.0 / 3.0).abs() < 1e-12);
    }
    let one = decoherence_time(1, 1.0, Complex64::new(1.0, 0.0), MomentMode::Coherent, &c, &Default::default()).unwrap();
    let two = decoherence_time(1, 2.0, Complex64::new(1.0, 0.0), MomentMode::Coherent, &c, &Default::default()).unwrap();
    assert!((one.tau_d / two.tau_d - 1.5_f64.sqrt()).abs() < 1e-6);
}

#[test]
fn decoherence_time_shrinks_with_the_cat_size() {
    let c = couplings(1e4);
    let times: Vec<f64> = [0.5_f64, 1.0, 2.0, 4.0]
        .iter()
        .map(|a| decoherence_time(1, 2.0, Complex64::new(*a, 0.0), MomentMode::Coherent, &c, &Default::default()).unwrap().tau_d)
        .collect();
    assert!(times.iter().all(|t| *t > 0.0));
    assert!(times.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn finite_mirror_shifts_decoherence_times_at_first_order() {
    let ideal = couplings(1e9);
    let lossy = couplings(1e4);
    let eta = lossy.spectrum.eta_c[0];
    let alpha = Complex64::new(1.0, 0.0);
    for p in [1.0, 2.0] {
        let a = decoherence_time(1, p, alpha, MomentMode::Coherent, &lossy, &Default::default()).unwrap().tau_d;
        let b = decoherence_time(1, p, alpha, MomentMode::Coherent, &ideal, &Default::default()).unwrap().tau_d;
        let shift = a / b - 1.0;
        assert!(shift.abs() > 0.2 * eta && shift.abs() < 3.0 * eta, "p={p}: {shift:e} vs eta {eta:e}");
    }
}

#[test]
fn detuned_drive_is_protected() {
    let c = couplings(1e4);
    let r = linear_entropy_resonant(1, 1.37, 0.5, &cat(2.0), &c, &Default::default()).unwrap();
    assert!(r.channels.values().all(|v| *v == 0.0));
    let e = decoherence_time(1, 1.37, Complex64::new(1.0, 0.0), MomentMode::Coherent, &c, &Default::default());
    assert!(matches!(e, Err(CasimirError::NoResonance { .. })));
}

#[test]
fn vacuum_entropy_has_only_pair_channels() {
    let c = couplings(1e4);
    for p in 1..=6 {
        let r = linear_entropy_resonant(1, p as f64, 0.3, &ResonantState::Vacuum, &c, &Default::default()).unwrap();
        assert_eq!(r.channel(SCATTER_CC), 0.0);
        assert_eq!(r.channel(SCATTER_CR), 0.0);
        let total: f64 = r.channels.values().sum();
        assert!((r.s - r.s0 - total).abs() < 1e-12);
    }
}

#[test]
fn scattering_channels_scale_with_the_cat_occupation() {
    let c = couplings(1e4);
    let opts = Default::default();
    for p in [1.0, 2.0, 3.0] {
        let a = linear_entropy_resonant(1, p, 0.2, &cat(1.5), &c, &opts).unwrap();
        let b = linear_entropy_resonant(1, p, 0.2, &cat(3.0), &c, &opts).unwrap();
        assert!((b.channel(SCATTER_CC) - 2.0 * a.channel(SCATTER_CC)).abs() < 1e-15);
        // Pair channels are affine: weight |alpha|^2 + 1.
        assert!((b.channel(PAIR_CC) * 2.5 - a.channel(PAIR_CC) * 4.0).abs() < 1e-15);
        assert_eq!(a.channel(PAIR_CR), 0.0);
    }
}

fn general(gamma: f64, p: f64, tau: f64, descriptor: StateDescriptor, moving: bool) -> casimir_core::EntropyResult {
    let cfg = SystemConfig { gamma, ..SystemConfig::default() }.with_cutoffs_for(p);
    let w1 = cfg.omega1();
    let eps = 1e-2;
    let m = if moving { MotionLaw::sinusoidal(1.0, eps, p, w1).unwrap() } else { MotionLaw::Static { q0: 1.0 } };
    let t = tau / (eps * w1);
    let model = CouplingModel::for_motion(SpectrumSolver::exact(cfg), &m, t, PairSelection::Mode(1)).unwrap();
    let st = ModeState::new(vec![0.0; cfg.k_c], vec![0.0; cfg.k_r], 1, descriptor).unwrap();
    linear_entropy_general(&st, &model, &m, t, &EntropyOptions::default()).unwrap()
}

#[test]
fn static_mirror_keeps_the_initial_entropy() {
    let r = general(1e4, 2.0, 0.1, StateDescriptor::Thermal { mean: 1.5 }, false);
    assert!((r.s - (1.0 - 1.0 / 4.0)).abs() < 1e-12);
    assert_eq!(r.s, r.s0);
    let r = general(1e4, 2.0, 0.1, StateDescriptor::Cat { alpha: Complex64::new(1.0, 0.0) }, false);
    assert_eq!(r.s, 0.0);
}

#[test]
fn general_entropy_reports_its_channels() {
    let r = general(1e6, 1.0, 0.1, StateDescriptor::Cat { alpha: Complex64::new(2.0_f64.sqrt(), 0.0) }, true);
    let total: f64 = r.channels.values().sum();
    assert!((r.s - r.s0 - total).abs() < 1e-12);
    assert!(r.s > 0.0);
    assert!(r.channel(COHERENCE_CC) != 0.0);
    let v = general(1e6, 1.0, 0.1, StateDescriptor::Thermal { mean: 0.5 }, true);
    assert_eq!(v.channel(COHERENCE_CC), 0.0);
}

#[test]
fn general_vacuum_entropy_follows_the_closed_form() {
    let c = couplings(1e6);
    let gen = general(1e6, 3.0, 0.1, StateDescriptor::Vacuum, true);
    let cl = closed(3.0, 0.1, &ResonantState::Vacuum, &c);
    let ratio = gen.s / cl;
    assert!((ratio - 1.0).abs() < 0.1, "{ratio}");
}

#[test]
fn general_cat_entropy_is_a_quarter_of_the_printed_closed_form() {
    // The cat closed form carries (p tau)^2 where the vacuum form and the
    // double integral carry (p tau / 2)^2.
    let c = couplings(1e6);
    let alpha = Complex64::new(2.0_f64.sqrt(), 0.0);
    let gen = general(1e6, 1.0, 0.1, StateDescriptor::Cat { alpha }, true);
    let ratio = gen.s / closed(1.0, 0.1, &cat(2.0), &c);
    assert!((ratio - 0.25).abs() < 0.025, "{ratio}");
}
