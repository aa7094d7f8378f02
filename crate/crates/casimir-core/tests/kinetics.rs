use std::f64::consts::PI;

use casimir_core::couplings::effective_matrix_elements;
use casimir_core::kinetics::{
    chi_weight, delta_n_general, delta_n_ideal_vacuum, delta_n_resonant, kernels, thermal_occupation, totals, GeneralOptions,
    ResonanceOptions, DEGENERATE, PAIR_CC, SCATTER_CC,
};
use casimir_core::{
    Branch, CouplingModel, EffectiveCouplings, KernelConvention, ModeState, MotionLaw, OverlapMethod, PairSelection, PhaseOrder,
    SpectrumSolver, StateDescriptor, SystemConfig,
};
use num_complex::Complex64;

fn couplings(cfg: SystemConfig) -> EffectiveCouplings {
    effective_matrix_elements(&SpectrumSolver::exact(cfg), OverlapMethod::Analytic).unwrap()
}

fn sinusoid(cfg: &SystemConfig, eps: f64, p: f64, tau: f64) -> (MotionLaw, CouplingModel, f64) {
    let w1 = cfg.omega1();
    let m = MotionLaw::sinusoidal(cfg.q0, eps, p, w1).unwrap();
    let t = tau / (eps * w1);
    let model = CouplingModel::for_motion(SpectrumSolver::exact(*cfg), &m, t, PairSelection::Mode(1)).unwrap();
    (m, model, t)
}

#[test]
fn bose_occupations() {
    assert_eq!(thermal_occupation(1.0, 0.0), 0.0);
    assert!((thermal_occupation(1.0, 1.0 / 1.1_f64.ln()) - 10.0).abs() < 1e-12);
    assert!((thermal_occupation(2.0_f64.ln(), 1.0) - 1.0).abs() < 1e-15);
}

#[test]
fn kernels_at_coincident_times() {
    let cfg = SystemConfig { k_c: 4, k_r: 4, ..SystemConfig::default() };
    let (m, model, _) = sinusoid(&cfg, 0.01, 2.0, 0.1);
    let occ = vec![0.0, 2.0, 0.5, 0.0];
    let st = ModeState::new(occ.clone(), vec![0.0; 4], 1, StateDescriptor::Thermal { mean: 3.0 }).unwrap();
    let b = kernels(&st, &model, &m, 0.7, 0.7, KernelConvention::default(), PhaseOrder::ZerothInEpsilon).unwrap();
    for l in 1..=4 {
        let n = st.occupation(Branch::Cavity, l);
        assert!((b.f_c[l - 1] - Complex64::new(-2.0 * n - 1.0, 0.0)).norm() < 1e-14);
        assert!((b.g[l - 1] - Complex64::new(-1.0, 0.0)).norm() < 1e-14);
    }
}

#[test]
fn vacuum_kernels_reduce_to_single_phases() {
    let cfg = SystemConfig { k_c: 4, k_r: 4, ..SystemConfig::default() };
    let (m, model, _) = sinusoid(&cfg, 0.01, 2.0, 0.1);
    let st = ModeState::vacuum(1, 4, 4).unwrap();
    let printed = kernels(&st, &model, &m, 1.0, 0.3, KernelConvention::AsPrinted, PhaseOrder::ZerothInEpsilon).unwrap();
    let adjudicated = kernels(&st, &model, &m, 1.0, 0.3, KernelConvention::OracleAdjudicated, PhaseOrder::ZerothInEpsilon).unwrap();
    for l in 0..4 {
        let d = printed.delta_c[l];
        let e = Complex64::from_polar(1.0, -d);
        assert!((printed.f_c[l] + e).norm() < 1e-14);
        assert!((printed.g[l] + e).norm() < 1e-14);
        assert!((adjudicated.f_c[l] + e.conj()).norm() < 1e-14);
        assert!((adjudicated.g[l] + e.conj()).norm() < 1e-14);
    }
}

#[test]
fn static_mirror_has_no_kernels_and_creates_nothing() {
    let cfg = SystemConfig { k_c: 6, k_r: 20, ..SystemConfig::default() };
    let m = MotionLaw::Static { q0: 1.0 };
    let model = CouplingModel::for_motion(SpectrumSolver::exact(cfg), &m, 10.0, PairSelection::Mode(1)).unwrap();
    let st = ModeState::thermal(&model, 1, 1.0).unwrap();
    let b = kernels(&st, &model, &m, 2.0, 1.0, KernelConvention::default(), PhaseOrder::ZerothInEpsilon).unwrap();
    assert!(b.xi_plus.iter().chain(&b.xi_minus).chain(&b.upsilon_plus).chain(&b.upsilon_minus).all(|x| *x == 0.0));
    let r = delta_n_general(&st, &model, &m, 10.0, &GeneralOptions::default()).unwrap();
    assert_eq!(r.delta_n, 0.0);
    assert!(r.channels.values().all(|v| *v == 0.0));
    let v = delta_n_ideal_vacuum(1, &m, 10.0, 8, &GeneralOptions::default()).unwrap();
    assert_eq!(v.delta_n, 0.0);
}

#[test]
fn ideal_parametric_resonance() {
    let e = couplings(SystemConfig { k_c: 8, k_r: 8, ..SystemConfig::default() }.ideal());
    let st = ModeState::vacuum(1, 8, 8).unwrap();
    for tau in [0.1, 0.5, 2.0] {
        let r = delta_n_resonant(1, 2.0, tau, &st, &e, &ResonanceOptions::default()).unwrap();
        assert!((r.delta_n - (tau / 2.0).powi(2)).abs() < 1e-12);
        let total: f64 = r.channels.values().sum();
        assert!((total - r.delta_n).abs() < 1e-12);
    }
}

#[test]
fn lossy_resonance_is_reduced_by_gamma_factor() {
    let cfg = SystemConfig { gamma: 100.0 * PI - 1.0, k_c: 8, k_r: 400, ..SystemConfig::default() };
    let e = couplings(cfg);
    let st = ModeState::vacuum(1, 8, 400).unwrap();
    let r = delta_n_resonant(1, 2.0, 0.5, &st, &e, &ResonanceOptions::default()).unwrap();
    let g = 1.0 - 1.0 / (100.0 * PI);
    assert!((r.channel(DEGENERATE) - (g * 0.25).powi(2)).abs() < 1e-14);
}

#[test]
fn no_creation_at_the_fundamental_or_without_drive() {
    let e = couplings(SystemConfig { k_c: 8, k_r: 30, ..SystemConfig::default() });
    let st = ModeState::vacuum(1, 8, 30).unwrap();
    for p in [0.0, 1.0] {
        let r = delta_n_resonant(1, p, 0.4, &st, &e, &ResonanceOptions::default()).unwrap();
        assert_eq!(r.delta_n, 0.0);
        assert_eq!(totals(p, 0.4, &st, &e, &ResonanceOptions::default()).unwrap().n_total, 0.0);
    }
}

#[test]
fn thermal_resonance_channels() {
    let cfg = SystemConfig { k_c: 8, k_r: 8, ..SystemConfig::default() }.ideal();
    let e = couplings(cfg);
    let temp = cfg.omega1() / 1.1_f64.ln();
    let st = ModeState::thermal_from_frequencies(&e.spectrum.omega_c, &e.spectrum.omega_r, 1, temp).unwrap();
    assert!((st.selected_occupation() - 10.0).abs() < 1e-12);
    let n3 = st.occupation(Branch::Cavity, 3);
    assert!((n3 - 1.0 / (1.1_f64.powi(3) - 1.0)).abs() < 1e-12);
    assert!((n3 - 3.0211).abs() < 1e-4);
    let tau = 0.3;
    let hot = delta_n_resonant(1, 2.0, tau, &st, &e, &ResonanceOptions::default()).unwrap();
    let cold = delta_n_resonant(1, 2.0, tau, &ModeState::vacuum(1, 8, 8).unwrap(), &e, &ResonanceOptions::default()).unwrap();
    assert!((hot.channel(DEGENERATE) / cold.channel(DEGENERATE) - 21.0).abs() < 1e-12);
    let m13 = e.m_cc[(0, 2)];
    let scatter = -(4.0 / 3.0) * tau * tau * (10.0 - n3) * m13 * m13;
    assert!((hot.channel(SCATTER_CC) - scatter).abs() < 1e-12);
    assert_eq!(cold.channel(SCATTER_CC), 0.0);
}

#[test]
fn zero_temperature_feeds_only_modes_below_the_drive() {
    let cfg = SystemConfig { k_c: 20, k_r: 8, ..SystemConfig::default() }.ideal();
    let e = couplings(cfg);
    let st = ModeState::vacuum(1, 20, 8).unwrap();
    for p in 2..=16 {
        let t = totals(p as f64, 1.0 / p as f64, &st, &e, &ResonanceOptions::default()).unwrap();
        for (i, d) in t.per_mode.iter().enumerate() {
            let k = i + 1;
            if k >= p {
                assert_eq!(*d, 0.0, "p={p} k={k}");
            } else {
                assert!(*d > 0.0, "p={p} k={k}");
            }
        }
        let energy: f64 = t.per_mode.iter().enumerate().map(|(i, d)| (i + 1) as f64 * d).sum();
        assert!((t.energy - energy).abs() < 1e-12 * energy);
        for k in 1..=20 {
            let r = delta_n_resonant(k, p as f64, 0.2, &st.retarget(k).unwrap(), &e, &ResonanceOptions::default()).unwrap();
            assert_eq!(r.channel(SCATTER_CC), 0.0);
        }
    }
}

#[test]
fn ideal_weights() {
    assert_eq!(chi_weight(3, 3), 1.0 / 8.0);
    assert!((chi_weight(1, 2) - 2.0 / 9.0).abs() < 1e-15);
    assert_eq!(chi_weight(2, 5), chi_weight(5, 2));
}

#[test]
fn general_integral_follows_the_closed_form_in_the_ideal_limit() {
    let cfg = SystemConfig { gamma: 1e6, ..SystemConfig::default() }.with_cutoffs_for(3.0);
    let (m, model, t) = sinusoid(&cfg, 1e-2, 3.0, 0.1);
    let st = ModeState::vacuum(1, cfg.k_c, cfg.k_r).unwrap();
    let gen = delta_n_general(&st, &model, &m, t, &GeneralOptions::default()).unwrap();
    let closed = delta_n_resonant(1, 3.0, 0.1, &st, &couplings(cfg), &ResonanceOptions::default()).unwrap();
    // The dropped off-resonant terms are of relative size 1/(omega_1 t) = 0.1.
    assert!((gen.delta_n / closed.delta_n - 1.0).abs() < 0.1);
    let total: f64 = gen.channels.values().sum();
    assert!((total - gen.delta_n).abs() < 1e-12);
    assert!(gen.channel(SCATTER_CC) == 0.0);
}

#[test]
fn ideal_vacuum_path_matches_general_integral() {
    let cfg = SystemConfig { gamma: 1e7, k_c: 12, k_r: 30, ..SystemConfig::default() };
    let (m, model, t) = sinusoid(&cfg, 1e-2, 3.0, 0.1);
    let st = ModeState::vacuum(1, cfg.k_c, cfg.k_r).unwrap();
    let opts = GeneralOptions { include_reservoir: false, ..GeneralOptions::default() };
    let gen = delta_n_general(&st, &model, &m, t, &opts).unwrap();
    let ideal = delta_n_ideal_vacuum(1, &m, t, cfg.k_c, &opts).unwrap();
    let pair = ideal.channel(PAIR_CC) / gen.channel(PAIR_CC);
    assert!((pair - 1.0).abs() < 0.02, "pair ratio {pair}");
    // The diagonal weight 1/8 is half of what the degenerate channel needs.
    let (m2, model2, t2) = sinusoid(&cfg, 1e-2, 2.0, 0.1);
    let gen2 = delta_n_general(&st, &model2, &m2, t2, &opts).unwrap();
    let ideal2 = delta_n_ideal_vacuum(1, &m2, t2, cfg.k_c, &opts).unwrap();
    let deg = ideal2.channel(DEGENERATE) / gen2.channel(DEGENERATE);
    assert!((deg - 0.5).abs() < 0.01, "degenerate ratio {deg}");
}

#[test]
fn general_integral_is_second_order_in_epsilon() {
    let cfg = SystemConfig { gamma: 1e6, k_c: 6, k_r: 20, ..SystemConfig::default() };
    let opts = GeneralOptions { include_reservoir: false, ..GeneralOptions::default() };
    let st = ModeState::vacuum(1, cfg.k_c, cfg.k_r).unwrap();
    let scaled: Vec<f64> = [1e-3, 2e-3, 4e-3]
        .iter()
        .map(|eps| {
            let (m, model, _) = sinusoid(&cfg, *eps, 2.0, 0.1);
            // Fixed physical time: the second-order amplitude then scales as eps^2.
            let t = 10.0 / cfg.omega1();
            delta_n_general(&st, &model, &m, t, &opts).unwrap().delta_n / (eps * eps)
        })
        .collect();
    for s in &scaled[1..] {
        assert!((s / scaled[0] - 1.0).abs() < 0.01, "{scaled:?}");
    }
}

#[test]
fn photon_numbers_stay_finite_for_a_ramp() {
    let cfg = SystemConfig { k_c: 6, k_r: 20, ..SystemConfig::default() };
    let samples: Vec<_> = (0..=200).map(|i| {
        let t = i as f64 * 0.05;
        (t, 1.0 + 1e-3 * t * t / 100.0, 0.0)
    }).collect();
    let m = MotionLaw::tabulated(&samples).unwrap();
    let model = CouplingModel::for_motion(SpectrumSolver::exact(cfg), &m, 10.0, PairSelection::Mode(1)).unwrap();
    let st = ModeState::vacuum(1, 6, 20).unwrap();
    let r = delta_n_general(&st, &model, &m, 10.0, &GeneralOptions::default()).unwrap();
    assert!(r.delta_n.is_finite() && r.delta_n >= 0.0);
    assert!(r.p.is_none() && r.tau.is_none());
}

#[test]
fn invalid_states_are_rejected() {
    assert!(ModeState::new(vec![0.0, -1.0], vec![], 1, StateDescriptor::Vacuum).is_err());
    assert!(ModeState::vacuum(3, 2, 0).is_err());
    let mut rho = casimir_core::fock::thermal(1.0, 1e-12);
    rho[(0, 1)] = Complex64::new(0.1, 0.0);
    rho[(1, 0)] = Complex64::new(0.1, 0.0);
    let st = ModeState::vacuum(1, 3, 0).unwrap();
    assert!(st.with_spectator(Branch::Cavity, 2, &rho).is_err());
}
