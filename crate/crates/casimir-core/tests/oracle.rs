use casimir_core::fock::{self, CMatrix};
use casimir_core::oracle::{
    build_hamiltonian, evolve, observables, reservoir_band, run_with_check, trajectory_rows, MixedState, OracleOptions, OracleRun,
    TruncatedSystem,
};
use casimir_core::{Branch, CouplingModel, MotionLaw, OverlapMethod, PairSelection, QDependence, SpectrumSolver, SystemConfig};
use num_complex::Complex64;

fn cfg() -> SystemConfig {
    SystemConfig { gamma: 1e6, k_c: 6, k_r: 40, ..SystemConfig::default() }
}

fn model(modes: &[(Branch, usize)], motion: &MotionLaw, t: f64) -> CouplingModel {
    CouplingModel::new(
        SpectrumSolver::exact(cfg()),
        motion.q_range(t),
        PairSelection::Modes(modes.to_vec()),
        OverlapMethod::default(),
        QDependence::default(),
    )
    .unwrap()
}

fn cavity(ks: &[usize]) -> Vec<(Branch, usize)> {
    ks.iter().map(|k| (Branch::Cavity, *k)).collect()
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

fn vacuum_ensemble(system: &TruncatedSystem) -> MixedState {
    let factors = vec![fock::thermal(0.0, 1e-16); system.modes.len()];
    MixedState::product(system, &factors).unwrap().0
}

#[test]
fn hamiltonian_is_hermitian() {
    let modes = cavity(&[1, 2, 3]);
    let m = MotionLaw::sinusoidal(1.0, 0.01, 2.0, cfg().omega1()).unwrap();
    let model = model(&modes, &m, 5.0);
    let sys = TruncatedSystem::new(modes, 3).unwrap();
    for t in [0.0, 0.37, 2.9] {
        let h = build_hamiltonian(&sys, &model, &m, t).unwrap();
        assert!(max_abs(&(&h - h.adjoint())) < 1e-12);
        assert!(max_abs(&h) > 0.0);
    }
}

#[test]
fn static_mirror_gives_zero_hamiltonian_and_frozen_state() {
    let modes = cavity(&[1, 2]);
    let m = MotionLaw::Static { q0: 1.0 };
    let model = model(&modes, &m, 5.0);
    let sys = TruncatedSystem::new(modes, 3).unwrap();
    assert_eq!(max_abs(&build_hamiltonian(&sys, &model, &m, 1.0).unwrap()), 0.0);
    let (rho0, _) = MixedState::product(&sys, &[fock::thermal(0.5, 1e-12), fock::thermal(0.0, 1e-16)]).unwrap();
    let traj = evolve(&sys, &rho0, &model, &m, &[0.0, 3.0], &OracleOptions::default()).unwrap();
    let d = traj.states.last().unwrap().to_density() - rho0.to_density();
    assert!(max_abs(&d) < 1e-14);
}

#[test]
fn single_mode_hamiltonian_is_pure_squeezing() {
    let modes = cavity(&[1]);
    let w1 = cfg().omega1();
    let m = MotionLaw::sinusoidal(1.0, 0.01, 2.0, w1).unwrap();
    let model = model(&modes, &m, 5.0);
    let sys = TruncatedSystem::new(modes, 6).unwrap();
    let t = 0.41;
    let h = build_hamiltonian(&sys, &model, &m, t).unwrap();
    let xi = model.xi(1, m.q(t), m.qdot(t));
    let omega = model.omega0(Branch::Cavity, 1) * t;
    let a = sys.annihilation(0);
    let ad = sys.creation(0);
    let raise = &ad * &ad * Complex64::from_polar(1.0, 2.0 * omega);
    let lower = &a * &a * Complex64::from_polar(1.0, -2.0 * omega);
    let expected = (raise - lower) * Complex64::new(0.0, xi);
    assert!(max_abs(&(&h - &expected)) < 1e-13 * max_abs(&expected));
}

#[test]
fn evolution_preserves_trace_and_global_purity() {
    let modes = cavity(&[1, 2, 3]);
    let w1 = cfg().omega1();
    let m = MotionLaw::sinusoidal(1.0, 0.01, 3.0, w1).unwrap();
    let t = 0.1 / (0.01 * w1);
    let model = model(&modes, &m, t);
    let sys = TruncatedSystem::new(modes, 3).unwrap();
    let (rho0, _) = MixedState::product(&sys, &[fock::thermal(0.3, 1e-10), fock::thermal(0.1, 1e-10), fock::thermal(0.0, 1e-16)]).unwrap();
    let grid: Vec<f64> = (0..=5).map(|i| i as f64 * t / 5.0).collect();
    let traj = evolve(&sys, &rho0, &model, &m, &grid, &OracleOptions::default()).unwrap();
    assert!(traj.trace_drift.iter().all(|d| d.abs() < 1e-8));
    let p0 = rho0.purity();
    assert!(traj.states.iter().all(|s| (s.purity() - p0).abs() < 1e-6));
    let rows = trajectory_rows(&traj, &sys);
    assert_eq!(rows.len(), 6);
    assert!(rows[5].occupations[0] > rows[0].occupations[0]);
}

#[test]
fn observables_of_simple_states() {
    let sys = TruncatedSystem::new(cavity(&[1, 2]), 4).unwrap();
    let vac = vacuum_ensemble(&sys);
    for i in 0..2 {
        let o = observables(&vac, &sys, i);
        assert!(o.mean_n.abs() < 1e-15 && o.entropy.abs() < 1e-15);
    }
    let rho = fock::thermal(0.8, 0.05);
    assert!(rho.nrows() <= 5);
    let rho = &rho / fock::trace(&rho);
    let (prod, _) = MixedState::product(&sys, &[rho.clone(), fock::thermal(0.0, 1e-16)]).unwrap();
    let o = observables(&prod, &sys, 0);
    let expected = 1.0 - fock::trace(&(&rho * &rho)).re;
    assert!((o.entropy - expected).abs() < 1e-12);
    assert!(observables(&prod, &sys, 1).entropy.abs() < 1e-12);
}

#[test]
fn photon_number_is_second_order_in_the_amplitude() {
    let modes = cavity(&[1, 2, 3]);
    let w1 = cfg().omega1();
    let t = 30.0 / w1;
    let dn: Vec<f64> = [1e-3, 2e-3]
        .iter()
        .map(|eps| {
            let m = MotionLaw::sinusoidal(1.0, *eps, 2.0, w1).unwrap();
            let model = model(&modes, &m, t);
            let sys = TruncatedSystem::new(modes.clone(), 3).unwrap();
            let traj = evolve(&sys, &vacuum_ensemble(&sys), &model, &m, &[0.0, t], &OracleOptions::default()).unwrap();
            observables(traj.states.last().unwrap(), &sys, 0).mean_n
        })
        .collect();
    let ratio = dn[1] / dn[0];
    assert!((ratio / 4.0 - 1.0).abs() < 0.02, "{ratio}");
}

#[test]
fn parametric_resonance_against_the_closed_form() {
    let w1 = cfg().omega1();
    let (eps, tau) = (1e-2, 0.1);
    let m = MotionLaw::sinusoidal(1.0, eps, 2.0, w1).unwrap();
    let t = tau / (eps * w1);
    let modes = cavity(&[1, 2, 3]);
    let model = model(&modes, &m, t);
    let vac = fock::thermal(0.0, 1e-16);
    let run = OracleRun {
        cavity_modes: vec![1, 2, 3],
        reservoir_modes: vec![],
        cavity_n_max: 4,
        reservoir_n_max: 1,
        cavity_states: vec![vac.clone(), vac.clone(), vac],
        cap: 4096,
    };
    let r = run_with_check(&run, (Branch::Cavity, 1), &model, &m, t, &OracleOptions::default()).unwrap();
    assert!(r.delta_n_converged(1e-3));
    assert!(r.global_purity_drift.abs() < 1e-6);
    // Closed form (Gamma tau / 2)^2; counter-rotating terms add about 1/(omega_1 t).
    let closed = (tau / 2.0) * (tau / 2.0);
    assert!((r.delta_n() / closed - 1.0).abs() < 0.1, "{}", r.delta_n() / closed);
}

#[test]
fn band_selection_targets_the_matching_reservoir_modes() {
    let m = MotionLaw::sinusoidal(1.0, 0.01, 2.0, cfg().omega1()).unwrap();
    let model = CouplingModel::for_motion(SpectrumSolver::exact(cfg()), &m, 5.0, PairSelection::Mode(1)).unwrap();
    let band = reservoir_band(&model, 1, 2.0, 2);
    assert_eq!(band.len(), 2);
    let kappa = model.kappa();
    for l in band {
        assert!((l as f64 * kappa - 1.0).abs() < 2.0 * kappa);
    }
}

#[test]
fn oversized_systems_are_refused() {
    let run = OracleRun {
        cavity_modes: vec![1, 2, 3, 4, 5],
        reservoir_modes: vec![],
        cavity_n_max: 5,
        reservoir_n_max: 1,
        cavity_states: vec![fock::thermal(0.0, 1e-16); 5],
        cap: 4096,
    };
    assert!(run.system(5).is_err());
}
