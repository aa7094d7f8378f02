//! Shared fixtures for the benchmarks.

use casimir_core::oracle::{OracleRun, DEFAULT_DIMENSION_CAP};
use casimir_core::{fock, Branch, CouplingModel, MotionLaw, OverlapMethod, PairSelection, QDependence, SpectrumSolver, SystemConfig};
use num_complex::Complex64;

/// Default system with cutoffs sized for detuning `p`.
pub fn config(p: f64) -> SystemConfig {
    SystemConfig::default().with_cutoffs_for(p)
}

/// Sinusoidal drive, its coupling model for mode 1 and the end time at `tau`.
pub fn drive(cfg: &SystemConfig, eps: f64, p: f64, tau: f64) -> (MotionLaw, CouplingModel, f64) {
    let w1 = cfg.omega1();
    let m = MotionLaw::sinusoidal(cfg.q0, eps, p, w1).expect("valid drive");
    let t = tau / (eps * w1);
    let model = CouplingModel::for_motion(SpectrumSolver::exact(*cfg), &m, t, PairSelection::Mode(1)).expect("model");
    (m, model, t)
}

/// Three cavity modes, vacuum or an |alpha|^2 = 2 cat in mode 1.
pub fn oracle_fixture(cfg: &SystemConfig, eps: f64, p: f64, tau: f64, cat: bool) -> (OracleRun, CouplingModel, MotionLaw, f64) {
    let w1 = cfg.omega1();
    let m = MotionLaw::sinusoidal(cfg.q0, eps, p, w1).expect("valid drive");
    let t = tau / (eps * w1);
    let modes = (1..=3).map(|k| (Branch::Cavity, k)).collect();
    let solver = SpectrumSolver::exact(SystemConfig { k_c: 3, ..*cfg });
    let model = CouplingModel::new(solver, m.q_range(t), PairSelection::Modes(modes), OverlapMethod::default(), QDependence::default())
        .expect("model");
    let vac = fock::thermal(0.0, 1e-16);
    let first = if cat { fock::projector(&fock::even_cat(Complex64::new(2f64.sqrt(), 0.0), 40).0) } else { vac.clone() };
    let run = OracleRun {
        cavity_modes: vec![1, 2, 3],
        reservoir_modes: vec![],
        cavity_n_max: 4,
        reservoir_n_max: 1,
        cavity_states: vec![first, vac.clone(), vac],
        cap: DEFAULT_DIMENSION_CAP,
    };
    (run, model, m, t)
}
