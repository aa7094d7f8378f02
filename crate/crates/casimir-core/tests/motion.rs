use std::f64::consts::PI;

use casimir_core::motion::{make_motion, phase, MotionKind, PhaseAccumulator, PhaseOrder};
use casimir_core::quadrature::{integrate, QuadOptions};
use casimir_core::{Branch, CasimirError, CouplingModel, MotionLaw, PairSelection, SpectrumSolver, SystemConfig};

fn solver() -> SpectrumSolver {
    SpectrumSolver::exact(SystemConfig { k_c: 4, k_r: 4, ..SystemConfig::default() })
}

#[test]
fn sinusoid_starts_at_rest_position_with_peak_velocity() {
    let w1 = PI;
    let m = MotionLaw::sinusoidal(1.3, 0.01, 2.0, w1).unwrap();
    assert_eq!(m.q(0.0), 1.3);
    assert!((m.qdot(0.0) - 1.3 * 0.01 * 2.0 * w1).abs() < 1e-15);
    let t_max = PI / (2.0 * 2.0 * w1);
    assert!((m.q(t_max) - 1.3 * 1.01).abs() < 1e-14);
    assert_eq!(m.period(), Some(2.0 * PI / (2.0 * w1)));
}

#[test]
fn static_mirror_never_moves() {
    let m = make_motion(MotionKind::Static, 1.0, 0.5, 3.0, PI).unwrap();
    assert!(m.is_static());
    for t in [0.0, 0.3, 7.0, 1e3] {
        assert_eq!(m.qdot(t), 0.0);
        assert_eq!(m.q(t), 1.0);
    }
    assert!(MotionLaw::sinusoidal(1.0, 0.0, 2.0, PI).unwrap().is_static());
}

#[test]
fn amplitude_reaching_the_leaky_mirror_is_rejected() {
    for eps in [1.0, 1.5, -0.1] {
        assert!(matches!(MotionLaw::sinusoidal(1.0, eps, 2.0, PI), Err(CasimirError::InvalidMotion(_))));
    }
    assert!(MotionLaw::sinusoidal(0.0, 0.01, 2.0, PI).is_err());
    assert!(MotionLaw::sinusoidal(1.0, 0.01, f64::NAN, PI).is_err());
}

#[test]
fn static_phase_is_linear_for_either_order() {
    let s = solver();
    let m = MotionLaw::Static { q0: 1.0 };
    let w2 = s.omega(Branch::Cavity, 2, 1.0).unwrap();
    for order in [PhaseOrder::ZerothInEpsilon, PhaseOrder::ExactQuadrature] {
        let ph = phase(&m, &s, Branch::Cavity, 2, 3.7, order).unwrap();
        assert!((ph - w2 * 3.7).abs() < 1e-12);
    }
    let flat = MotionLaw::sinusoidal(1.0, 0.0, 2.0, PI).unwrap();
    let ph = phase(&flat, &s, Branch::Cavity, 2, 3.7, PhaseOrder::ExactQuadrature).unwrap();
    assert!((ph - w2 * 3.7).abs() < 1e-12);
}

#[test]
fn exact_phase_departs_from_zeroth_order_by_order_epsilon() {
    let w1 = solver().config.omega1();
    let eps = 1e-2;
    let m = MotionLaw::sinusoidal(1.0, eps, 2.0, w1).unwrap();
    // At this amplitude L0/q sweeps through 30, where the exact roots of the two
    // families collide; the rest-scaled model follows the cavity pole diabatically.
    let s = CouplingModel::for_motion(solver(), &m, m.period().unwrap(), PairSelection::Mode(1)).unwrap();
    for t in [m.period().unwrap(), 0.3 * m.period().unwrap()] {
        let zeroth = phase(&m, &s, Branch::Cavity, 1, t, PhaseOrder::ZerothInEpsilon).unwrap();
        let exact = phase(&m, &s, Branch::Cavity, 1, t, PhaseOrder::ExactQuadrature).unwrap();
        let d = (exact - zeroth).abs();
        assert!(d > 0.0);
        assert!(d <= eps * w1 * t, "{d} vs {}", eps * w1 * t);
    }
}

#[test]
fn reservoir_phases_ignore_the_mirror() {
    let s = solver();
    let m = MotionLaw::sinusoidal(1.0, 0.05, 2.0, s.config.omega1()).unwrap();
    let w = s.omega(Branch::Reservoir, 3, 1.0).unwrap();
    let ph = phase(&m, &s, Branch::Reservoir, 3, 2.5, PhaseOrder::ExactQuadrature).unwrap();
    assert!((ph - 2.5 * w).abs() < 1e-12);
}

#[test]
fn exact_solver_reports_colliding_poles() {
    let s = solver();
    let m = MotionLaw::sinusoidal(1.0, 0.01, 2.0, s.config.omega1()).unwrap();
    let q_cross = s.config.l0 / 30.0;
    assert!(m.q_range(10.0).1 > q_cross);
    assert!(matches!(s.omega(Branch::Cavity, 1, q_cross), Err(CasimirError::BracketCollision { .. })));
}

#[test]
fn exact_phase_is_additive() {
    let s = solver();
    let m = MotionLaw::sinusoidal(1.0, 0.005, 3.0, s.config.omega1()).unwrap();
    let acc = PhaseAccumulator { branch: Branch::Cavity, k: 2, order: PhaseOrder::ExactQuadrature };
    let (t1, t2) = (0.4, 1.9);
    let step = integrate(|u| s.omega(Branch::Cavity, 2, m.q(u)).unwrap(), t1, t2, &QuadOptions::default()).unwrap().value;
    let d = acc.delta(&m, &s, t2, t1).unwrap();
    assert!((d - step).abs() < 1e-8 * step.abs(), "{d} vs {step}");
}

#[test]
fn tabulated_sine_follows_the_analytic_law() {
    let w = 2.0 * PI;
    let exact = MotionLaw::sinusoidal(1.0, 0.01, 1.0, w).unwrap();
    let samples: Vec<_> = (0..=2000).map(|i| {
        let t = i as f64 * 1e-3;
        (t, exact.q(t), exact.qdot(t))
    }).collect();
    let tab = MotionLaw::tabulated(&samples).unwrap();
    assert!(tab.covers(2.0));
    assert!(!tab.covers(2.5));
    for t in [0.0, 0.1234, 0.77, 1.5] {
        assert!((tab.q(t) - exact.q(t)).abs() < 1e-9);
        assert!((tab.qdot(t) - exact.qdot(t)).abs() < 1e-4 * 0.01 * w);
    }
    let (lo, hi) = tab.q_range(2.0);
    assert!(lo >= 0.99 - 1e-9 && hi <= 1.01 + 1e-9);
}

#[test]
fn tabulated_ramp_has_consistent_velocity() {
    let samples: Vec<_> = (0..=10).map(|i| {
        let t = i as f64 * 0.1;
        (t, 1.0 + 0.02 * t, 0.0)
    }).collect();
    let tab = MotionLaw::tabulated(&samples).unwrap();
    assert!(!tab.is_static());
    for t in [0.05, 0.5, 0.95] {
        assert!((tab.qdot(t) - 0.02).abs() < 1e-12);
    }
}

#[test]
fn malformed_tables_are_rejected() {
    assert!(MotionLaw::tabulated(&[(0.0, 1.0, 0.0)]).is_err());
    assert!(MotionLaw::tabulated(&[(0.0, 1.0, 0.0), (0.0, 1.0, 0.0)]).is_err());
    assert!(MotionLaw::tabulated(&[(0.0, 1.0, 0.0), (1.0, -0.5, 0.0)]).is_err());
}
