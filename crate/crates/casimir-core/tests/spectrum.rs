use std::f64::consts::PI;

use casimir_core::spectrum::{
    exact_eigenfrequencies, mode_function, overlap, perturbative_eigenfrequencies, residual, BranchMethod,
};
use casimir_core::config::DEFAULT_L0;
use casimir_core::{Branch, CasimirError, SpectrumSolver, SystemConfig};

fn cfg(gamma: f64, l0: f64) -> SystemConfig {
    SystemConfig { gamma, l0, k_c: 8, k_r: 8, ..SystemConfig::default() }
}

#[test]
fn near_ideal_mirror_gives_dirichlet_root() {
    let c = cfg(1e6 * PI, 137.5);
    let w = exact_eigenfrequencies(&c, 1.0, Branch::Cavity, 1).unwrap()[0];
    assert!((w - PI).abs() < 1e-4);
}

#[test]
fn first_order_frequency_at_gamma_100() {
    let c = cfg(100.0, 137.5);
    let pert = perturbative_eigenfrequencies(&c, 1.0, Branch::Cavity, 1)[0];
    assert!((pert - PI / 1.01).abs() < 1e-12);
    let exact = exact_eigenfrequencies(&c, 1.0, Branch::Cavity, 1).unwrap()[0];
    let eta = exact / 100.0;
    assert!(((exact - pert) / exact).abs() <= 10.0 * eta * eta);
}

#[test]
fn roots_satisfy_the_eigenfrequency_condition() {
    for gamma in [3e2, 1e3, 1e4, 1e6] {
        let c = cfg(gamma, DEFAULT_L0);
        for branch in [Branch::Cavity, Branch::Reservoir] {
            let ws = exact_eigenfrequencies(&c, 1.0, branch, 8).unwrap();
            for w in &ws {
                let r = residual(&c, 1.0, *w);
                // Steep roots next to a pole of the other family are judged by the abscissa error.
                let lo = residual(&c, 1.0, w * (1.0 - 1e-12));
                let hi = residual(&c, 1.0, w * (1.0 + 1e-12));
                let bracketed = lo.signum() != hi.signum();
                assert!(r.abs() < 1e-10 * (1.0 + gamma / w) || bracketed, "{branch} {gamma}: residual {r}");
            }
            assert!(ws.windows(2).all(|p| p[1] > p[0]));
            assert!(ws[0] > 0.0);
        }
    }
}

#[test]
fn exact_and_first_order_differ_at_second_order() {
    for gamma in [100.0 * PI, 1e3, 1e4] {
        let c = cfg(gamma, DEFAULT_L0);
        for branch in [Branch::Cavity, Branch::Reservoir] {
            let ex = exact_eigenfrequencies(&c, 1.0, branch, 8).unwrap();
            let pt = perturbative_eigenfrequencies(&c, 1.0, branch, 8);
            for (k, (e, p)) in ex.iter().zip(&pt).enumerate() {
                let eta = e / gamma;
                if eta > 1e-2 {
                    continue;
                }
                let rel = ((e - p) / e).abs();
                assert!(rel <= 10.0 * eta * eta, "{branch}{} gamma={gamma}: {rel:e} vs {:e}", k + 1, 10.0 * eta * eta);
            }
        }
    }
}

#[test]
fn ideal_limit_reproduces_both_ladders() {
    let c = cfg(1e6 * PI, DEFAULT_L0);
    let wc = exact_eigenfrequencies(&c, 1.0, Branch::Cavity, 8).unwrap();
    let wr = exact_eigenfrequencies(&c, 1.0, Branch::Reservoir, 8).unwrap();
    for k in 1..=8 {
        assert!((wc[k - 1] / (k as f64 * PI) - 1.0).abs() < 1e-5);
        assert!((wr[k - 1] / (k as f64 * PI / DEFAULT_L0) - 1.0).abs() < 1e-5);
    }
    let inf = SystemConfig { gamma: f64::INFINITY, ..c };
    let w = exact_eigenfrequencies(&inf, 2.0, Branch::Cavity, 3).unwrap();
    for (k, wk) in w.iter().enumerate() {
        assert_eq!(*wk, (k + 1) as f64 * PI / 2.0);
    }
}

#[test]
fn kappa_matches_first_order_ratio() {
    let c = SystemConfig { gamma: 1e3, ..SystemConfig::default() };
    let s = SpectrumSolver::new(c, BranchMethod::Perturbative).spectrum(1.0).unwrap();
    let expected = (1.0 / c.l0) * (1.0 + 1.0 / c.gamma) / (1.0 + 1.0 / (c.gamma * c.l0));
    assert!((s.kappa - expected).abs() < 1e-14);
}

#[test]
fn mode_functions_vanish_at_walls_and_are_continuous() {
    let c = cfg(1e4, DEFAULT_L0);
    for branch in [Branch::Cavity, Branch::Reservoir] {
        for k in 1..=5 {
            let m = mode_function(&c, branch, k, 1.0).unwrap();
            assert!(m.eval(1.0).abs() < 1e-12);
            assert!(m.eval(-DEFAULT_L0).abs() < 1e-10);
            let left = m.r * (DEFAULT_L0 * m.omega).sin();
            let right = m.c * (-m.omega).sin();
            assert!((left - right).abs() < 1e-12, "{branch}{k}: {left} vs {right}");
        }
    }
}

#[test]
fn modes_are_orthonormal() {
    let c = cfg(1e4, DEFAULT_L0);
    let mut modes = Vec::new();
    for branch in [Branch::Cavity, Branch::Reservoir] {
        for k in 1..=5 {
            modes.push(mode_function(&c, branch, k, 1.0).unwrap());
        }
    }
    for (i, a) in modes.iter().enumerate() {
        for (j, b) in modes.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            let o = overlap(a, b);
            assert!((o - expected).abs() < 1e-8, "{}{} x {}{}: {o}", a.branch, a.k, b.branch, b.k);
        }
    }
}

#[test]
fn cavity_frequencies_scale_inversely_with_length_when_ideal() {
    let c = SystemConfig { gamma: f64::INFINITY, ..SystemConfig::default() };
    let s = SpectrumSolver::exact(c);
    for k in 1..=4 {
        let a = s.omega(Branch::Cavity, k, 1.0).unwrap();
        let b = s.omega(Branch::Cavity, k, 1.7).unwrap();
        assert!((a / b - 1.7).abs() < 1e-13);
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let base = SystemConfig::default();
    for bad in [
        SystemConfig { q0: 0.0, ..base },
        SystemConfig { l0: -1.0, ..base },
        SystemConfig { gamma: 0.0, ..base },
        SystemConfig { temperature: -1.0, ..base },
        SystemConfig { k_c: 0, ..base },
        SystemConfig { l0: 60.0, ..base },
    ] {
        assert!(matches!(bad.validate(), Err(CasimirError::InvalidConfig(_))));
    }
    assert!(SystemConfig { gamma: 10.0, ..base }.warnings().iter().any(|w| w.contains("eta_1")));
}

#[test]
fn zero_index_is_out_of_range() {
    let s = SpectrumSolver::exact(SystemConfig::default());
    assert!(matches!(s.omega(Branch::Cavity, 0, 1.0), Err(CasimirError::IndexOutOfRange { .. })));
}
