//! Eigenfrequencies and mode functions of the cavity + reservoir system
//! with a partially transmitting delta mirror at x = 0.
//!
//! The cavity occupies [0, q], the reservoir [-L0, 0]. Eigenfrequencies solve
//!
//! ```text
//! cot(w q) + cot(w L0) + gamma / w = 0
//! ```
//!
//! Roots sit just below the cotangent poles n*pi/q (cavity family) and
//! m*pi/L0 (reservoir family). Each root is stored as an offset below its
//! pole so that trigonometric functions near the pole keep full precision.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config::{Branch, SystemConfig};
use crate::error::{CasimirError, Result};
use crate::quadrature::composite_gl;
use crate::roots::{brent, RootOptions};

/// Bracket padding in units of pi/q.
pub const POLE_PADDING: f64 = 1e-6;
/// Root residual tolerance, relative to `1 + gamma/omega`; steep roots are
/// judged by the implied abscissa error instead.
pub const RESIDUAL_TOL: f64 = 1e-10;
pub const MAX_ROOT_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
pub enum BranchMethod {
    #[default]
    ExactRoot,
    Perturbative,
}

/// A single eigenfrequency with its pole bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenmode {
    pub branch: Branch,
    pub k: usize,
    pub q: f64,
    pub omega: f64,
    /// Distance below the parent pole.
    pub offset: f64,
    pub sin_q: f64,
    pub cos_q: f64,
    pub sin_l: f64,
    pub cos_l: f64,
    /// d omega / d q at fixed L0 and gamma.
    pub domega_dq: f64,
}

/// Residual of the eigenfrequency condition at `omega`, evaluated directly.
pub fn residual(cfg: &SystemConfig, q: f64, omega: f64) -> f64 {
    1.0 / (omega * q).tan() + 1.0 / (omega * cfg.l0).tan() + cfg.gamma / omega
}

fn parity(n: usize) -> f64 {
    if n % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// sin and cos of `n*pi - y`.
fn reduced_trig(n: usize, y: f64) -> (f64, f64) {
    let s = parity(n);
    (-s * y.sin(), s * y.cos())
}

/// Largest pole `m*pi/len` strictly below `pole`, returned as `(m, pole - m*pi/len)`.
fn other_family_base(pole: f64, len: f64) -> (usize, f64) {
    let x = pole * len / PI;
    let m = (x.ceil() - 1.0).max(0.0);
    (m as usize, pole - m * PI / len)
}

/// sin and cos of `m*pi + y`.
fn shifted_trig(m: usize, y: f64) -> (f64, f64) {
    let s = parity(m);
    (s * y.sin(), s * y.cos())
}

/// Eigenfrequency solver bound to a configuration and a branch method.
#[derive(Debug, Clone, Copy)]
pub struct SpectrumSolver {
    pub config: SystemConfig,
    pub method: BranchMethod,
}

impl SpectrumSolver {
    pub fn new(config: SystemConfig, method: BranchMethod) -> Self {
        SpectrumSolver { config, method }
    }

    pub fn exact(config: SystemConfig) -> Self {
        Self::new(config, BranchMethod::ExactRoot)
    }

    fn branch_length(&self, branch: Branch, q: f64) -> f64 {
        match branch {
            Branch::Cavity => q,
            Branch::Reservoir => self.config.l0,
        }
    }

    fn other_length(&self, branch: Branch, q: f64) -> f64 {
        match branch {
            Branch::Cavity => self.config.l0,
            Branch::Reservoir => q,
        }
    }

    /// Eigenmode `k` (1-based) of `branch` at mirror position `q`.
    pub fn eigenmode(&self, branch: Branch, k: usize, q: f64) -> Result<Eigenmode> {
        if k == 0 {
            return Err(CasimirError::IndexOutOfRange { branch, k, cutoff: self.config.cutoff(branch) });
        }
        if !(q > 0.0) {
            return Err(CasimirError::InvalidConfig(format!("mirror position must be positive, got {q}")));
        }
        let own = self.branch_length(branch, q);
        let other = self.other_length(branch, q);
        let pole = k as f64 * PI / own;
        let inv_g = self.config.inv_gamma();

        let offset = match self.method {
            BranchMethod::Perturbative => pole * inv_g / (own + inv_g),
            BranchMethod::ExactRoot if self.config.is_ideal() => 0.0,
            BranchMethod::ExactRoot => self.solve_offset(branch, k, q, pole, own, other)?,
        };
        let omega = pole - offset;
        let (s_own, c_own) = reduced_trig(k, own * offset);
        let (m, base) = other_family_base(pole, other);
        let (s_oth, c_oth) = shifted_trig(m, other * (base - offset));
        let (sin_q, cos_q, sin_l, cos_l) = match branch {
            Branch::Cavity => (s_own, c_own, s_oth, c_oth),
            Branch::Reservoir => (s_oth, c_oth, s_own, c_own),
        };

        let ideal = self.config.is_ideal();
        let domega_dq = if branch == Branch::Reservoir && (self.method == BranchMethod::Perturbative || ideal) {
            0.0
        } else if self.method == BranchMethod::Perturbative {
            -omega / (q + inv_g)
        } else if ideal {
            -omega / q
        } else {
            let csc2_q = 1.0 / (sin_q * sin_q);
            let csc2_l = 1.0 / (sin_l * sin_l);
            -omega * csc2_q / (q * csc2_q + self.config.l0 * csc2_l + self.config.gamma / (omega * omega))
        };

        Ok(Eigenmode { branch, k, q, omega, offset, sin_q, cos_q, sin_l, cos_l, domega_dq })
    }

    fn solve_offset(&self, branch: Branch, k: usize, q: f64, pole: f64, own: f64, other: f64) -> Result<f64> {
        let pad = POLE_PADDING * PI / q;
        // Nearest pole of the other family.
        let x = pole * other / PI;
        let m_near = x.round();
        if m_near >= 1.0 && (x - m_near).abs() * PI / other < pad {
            return Err(CasimirError::BracketCollision { branch, k, pole, other: m_near * PI / other });
        }
        let (_, base) = other_family_base(pole, other);
        let gap = (PI / own).min(base);
        if gap < 2.0 * pad {
            return Err(CasimirError::BracketCollision { branch, k, pole, other: pole - base });
        }
        let gamma = self.config.gamma;
        // cot is pi-periodic, so both cotangents are evaluated on reduced arguments.
        let f = |d: f64| {
            let w = pole - d;
            -1.0 / (own * d).tan() + 1.0 / (other * (base - d)).tan() + gamma / w
        };
        let lo = gap * 1e-14;
        let hi = gap * (1.0 - 1e-12);
        let opts = RootOptions { x_tol: 1e-17 * pole.max(1.0), max_iter: MAX_ROOT_ITER };
        let d = brent(f, lo, hi, &opts)?;
        let r = f(d);
        let scale = 1.0 + gamma / (pole - d);
        // Next to a pole of the other family the slope is huge; accept any
        // residual that corresponds to a root error at rounding level.
        let slope = own / (own * d).sin().powi(2) + other / (other * (base - d)).sin().powi(2) + gamma / (pole - d).powi(2);
        let step = r.abs() / slope;
        if !(r.abs() <= RESIDUAL_TOL * scale || step <= 1e-13 * pole) {
            return Err(CasimirError::NoConvergence { what: "eigenfrequency root", iterations: MAX_ROOT_ITER, residual: r });
        }
        Ok(d)
    }

    pub fn omega(&self, branch: Branch, k: usize, q: f64) -> Result<f64> {
        Ok(self.eigenmode(branch, k, q)?.omega)
    }

    pub fn frequencies(&self, branch: Branch, q: f64, count: usize) -> Result<Vec<f64>> {
        (1..=count).map(|k| self.omega(branch, k, q)).collect()
    }

    pub fn mode(&self, branch: Branch, k: usize, q: f64) -> Result<ModeFunction> {
        ModeFunction::from_eigenmode(&self.eigenmode(branch, k, q)?, self.config.l0)
    }

    /// Both branches up to the configured cutoffs.
    pub fn spectrum(&self, q: f64) -> Result<ModeSpectrum> {
        let omega_c = self.frequencies(Branch::Cavity, q, self.config.k_c)?;
        let omega_r = self.frequencies(Branch::Reservoir, q, self.config.k_r)?;
        let w1r = match omega_r.first() {
            Some(w) => *w,
            None => self.omega(Branch::Reservoir, 1, q)?,
        };
        let inv_g = self.config.inv_gamma();
        Ok(ModeSpectrum {
            q,
            eta_c: omega_c.iter().map(|w| w * inv_g).collect(),
            eta_r: omega_r.iter().map(|w| w * inv_g).collect(),
            kappa: w1r / omega_c[0],
            omega_c,
            omega_r,
            method: self.method,
        })
    }
}

/// Eigenfrequencies of both branches at one mirror position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    pub q: f64,
    pub omega_c: Vec<f64>,
    pub omega_r: Vec<f64>,
    pub eta_c: Vec<f64>,
    pub eta_r: Vec<f64>,
    /// omega_1^R / omega_1^C.
    pub kappa: f64,
    pub method: BranchMethod,
}

impl ModeSpectrum {
    pub fn omega(&self, branch: Branch, k: usize) -> Option<f64> {
        let v = match branch {
            Branch::Cavity => &self.omega_c,
            Branch::Reservoir => &self.omega_r,
        };
        k.checked_sub(1).and_then(|i| v.get(i)).copied()
    }

    pub fn omega1(&self) -> f64 {
        self.omega_c[0]
    }
}

/// Lowest `count` roots of the requested branch, ascending.
pub fn exact_eigenfrequencies(config: &SystemConfig, q: f64, branch: Branch, count: usize) -> Result<Vec<f64>> {
    SpectrumSolver::new(*config, BranchMethod::ExactRoot).frequencies(branch, q, count)
}

/// First-order frequencies `(k pi / L)(1 + 1/(gamma L))^-1`.
pub fn perturbative_eigenfrequencies(config: &SystemConfig, q: f64, branch: Branch, count: usize) -> Vec<f64> {
    let len = match branch {
        Branch::Cavity => q,
        Branch::Reservoir => config.l0,
    };
    let inv_g = config.inv_gamma();
    (1..=count).map(|k| k as f64 * PI / (len + inv_g)).collect()
}

/// Normalized exact-root mode function.
pub fn mode_function(config: &SystemConfig, branch: Branch, k: usize, q: f64) -> Result<ModeFunction> {
    SpectrumSolver::exact(*config).mode(branch, k, q)
}

/// psi(x) = C sin((x - q) w) on [0, q] and R sin((x + L0) w) on [-L0, 0],
/// with unit norm over [-L0, q]. Derivatives are taken with respect to q.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFunction {
    pub branch: Branch,
    pub k: usize,
    pub q: f64,
    pub l0: f64,
    pub omega: f64,
    pub c: f64,
    pub r: f64,
    pub domega: f64,
    pub dc: f64,
    pub dr: f64,
}

impl ModeFunction {
    pub fn from_eigenmode(m: &Eigenmode, l0: f64) -> Result<Self> {
        let (w, dw, q) = (m.omega, m.domega_dq, m.q);
        // Unnormalized amplitudes satisfying continuity at x = 0.
        let uc = -m.sin_l;
        let ur = m.sin_q;
        let duc = -m.cos_l * l0 * dw;
        let dur = m.cos_q * (w + q * dw);
        if uc * uc + ur * ur < 1e-28 {
            return Err(CasimirError::DegenerateNormalization { branch: m.branch, k: m.k });
        }
        let s2q = 2.0 * m.sin_q * m.cos_q;
        let c2q = m.cos_q * m.cos_q - m.sin_q * m.sin_q;
        let s2l = 2.0 * m.sin_l * m.cos_l;
        let c2l = m.cos_l * m.cos_l - m.sin_l * m.sin_l;
        let a = 0.5 * q - s2q / (4.0 * w);
        let da = m.sin_q * m.sin_q + dw * (-q * c2q / (2.0 * w) + s2q / (4.0 * w * w));
        let b = 0.5 * l0 - s2l / (4.0 * w);
        let db = dw * (-l0 * c2l / (2.0 * w) + s2l / (4.0 * w * w));
        let n = uc * uc * a + ur * ur * b;
        let dn = 2.0 * uc * duc * a + uc * uc * da + 2.0 * ur * dur * b + ur * ur * db;
        let lead = match m.branch {
            Branch::Cavity => if uc != 0.0 { uc } else { ur },
            Branch::Reservoir => if ur != 0.0 { ur } else { uc },
        };
        let sign = lead.signum();
        let inv = 1.0 / n.sqrt();
        let dinv = -0.5 * dn * inv / n;
        Ok(ModeFunction {
            branch: m.branch,
            k: m.k,
            q,
            l0,
            omega: w,
            c: sign * uc * inv,
            r: sign * ur * inv,
            domega: dw,
            dc: sign * (duc * inv + uc * dinv),
            dr: sign * (dur * inv + ur * dinv),
        })
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.c * ((x - self.q) * self.omega).sin()
        } else {
            self.r * ((x + self.l0) * self.omega).sin()
        }
    }

    /// Partial derivative of psi with respect to q at fixed x.
    pub fn dq(&self, x: f64) -> f64 {
        if x >= 0.0 {
            let arg = (x - self.q) * self.omega;
            self.dc * arg.sin() + self.c * arg.cos() * ((x - self.q) * self.domega - self.omega)
        } else {
            let s = x + self.l0;
            let arg = s * self.omega;
            self.dr * arg.sin() + self.r * s * self.domega * arg.cos()
        }
    }
}

fn int_cos(c: f64, l: f64) -> f64 {
    let x = c * l;
    if x.abs() < 1e-4 {
        l * (1.0 - x * x / 6.0)
    } else {
        (x).sin() / c
    }
}

fn int_sin(c: f64, l: f64) -> f64 {
    if c == 0.0 {
        return 0.0;
    }
    let h = (0.5 * c * l).sin();
    2.0 * h * h / c
}

fn int_s_sin(c: f64, l: f64) -> f64 {
    let x = c * l;
    if x.abs() < 0.5 {
        let x2 = x * x;
        l * l * x * (1.0 / 3.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 840.0 - x2 * (1.0 / 45360.0 - x2 / 3991680.0))))
    } else {
        (x.sin() - x * x.cos()) / (c * c)
    }
}

/// int_0^L sin(a s) sin(b s) ds
fn ss(a: f64, b: f64, l: f64) -> f64 {
    0.5 * (int_cos(a - b, l) - int_cos(a + b, l))
}

/// int_0^L cos(a s) sin(b s) ds
fn cs(a: f64, b: f64, l: f64) -> f64 {
    0.5 * (int_sin(b + a, l) + int_sin(b - a, l))
}

/// int_0^L s cos(a s) sin(b s) ds
fn xcs(a: f64, b: f64, l: f64) -> f64 {
    0.5 * (int_s_sin(b + a, l) + int_s_sin(b - a, l))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OverlapMethod {
    /// Closed-form integrals of the piecewise sinusoids.
    #[default]
    Analytic,
    /// Composite Gauss–Legendre, panels no wider than a quarter wavelength.
    Quadrature,
}

/// `int_{-L0}^{q} (d psi_a / d q) psi_b dx`.
pub fn derivative_overlap(a: &ModeFunction, b: &ModeFunction, method: OverlapMethod) -> f64 {
    match method {
        OverlapMethod::Analytic => {
            let (wa, wb) = (a.omega, b.omega);
            let cavity = a.dc * b.c * ss(wa, wb, a.q) + a.c * b.c * (wa * cs(wa, wb, a.q) + a.domega * xcs(wa, wb, a.q));
            let reservoir = if a.r == 0.0 && a.dr == 0.0 || b.r == 0.0 {
                0.0
            } else {
                a.dr * b.r * ss(wa, wb, a.l0) + a.r * b.r * a.domega * xcs(wa, wb, a.l0)
            };
            cavity + reservoir
        }
        OverlapMethod::Quadrature => quadrature_overlap(|x| a.dq(x) * b.eval(x), a, b),
    }
}

/// `int_{-L0}^{q} psi_a psi_b dx`.
pub fn overlap(a: &ModeFunction, b: &ModeFunction) -> f64 {
    quadrature_overlap(|x| a.eval(x) * b.eval(x), a, b)
}

fn quadrature_overlap(f: impl Fn(f64) -> f64, a: &ModeFunction, b: &ModeFunction) -> f64 {
    let wmax = a.omega.max(b.omega);
    let width = 0.25 * 2.0 * PI / wmax;
    let order = 10;
    let skip_reservoir = (a.r == 0.0 && a.dr == 0.0) || (b.r == 0.0 && b.dr == 0.0);
    let run = |refine: usize| {
        let pc = ((a.q / width).ceil() as usize).max(1) * refine;
        let mut v = composite_gl(&f, 0.0, a.q, pc, order);
        if !skip_reservoir {
            let pr = ((a.l0 / width).ceil() as usize).max(1) * refine;
            v += composite_gl(&f, -a.l0, 0.0, pr, order);
        }
        v
    };
    // Spectrally converged at this resolution; a single doubling confirms it.
    let coarse = run(1);
    let fine = run(2);
    if (fine - coarse).abs() <= 1e-8 * fine.abs().max(1e-8) {
        fine
    } else {
        run(4)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(gamma: f64) -> SystemConfig {
        SystemConfig { gamma, ..SystemConfig::default() }
    }

    #[test]
    fn ideal_limit_is_dirichlet() {
        let c = cfg(f64::INFINITY);
        let w = exact_eigenfrequencies(&c, 1.0, Branch::Cavity, 5).unwrap();
        for (k, wk) in w.iter().enumerate() {
            assert_eq!(*wk, (k + 1) as f64 * PI);
        }
        let m = mode_function(&c, Branch::Cavity, 3, 1.0).unwrap();
        assert!((m.c - 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(m.r, 0.0);
    }

    #[test]
    fn large_gamma_root_close_to_pole() {
        let c = SystemConfig { l0: 137.5, gamma: 1e6 * PI, ..SystemConfig::default() };
        let w = exact_eigenfrequencies(&c, 1.0, Branch::Cavity, 1).unwrap()[0];
        assert!((w - PI).abs() < 1e-4);
    }

    #[test]
    fn first_order_frequency() {
        let c = cfg(100.0);
        let w = perturbative_eigenfrequencies(&c, 1.0, Branch::Cavity, 1)[0];
        assert!((w - PI / 1.01).abs() < 1e-15);
    }

    #[test]
    fn continuity_and_boundaries() {
        let c = cfg(300.0);
        for branch in [Branch::Cavity, Branch::Reservoir] {
            for k in 1..6 {
                let m = mode_function(&c, branch, k, 1.0).unwrap();
                let left = m.r * (c.l0 * m.omega).sin();
                let right = m.c * (-m.omega).sin();
                assert!((left - right).abs() < 1e-12, "{branch}{k}: {left} vs {right}");
                assert_eq!(m.eval(1.0).abs() < 1e-12, true);
                assert!(m.eval(-c.l0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn analytic_overlap_matches_quadrature() {
        let c = cfg(300.0);
        let s = SpectrumSolver::exact(c);
        let modes: Vec<_> = (1..5)
            .map(|k| s.mode(Branch::Cavity, k, 1.0).unwrap())
            .chain((1..4).map(|k| s.mode(Branch::Reservoir, k + 60, 1.0).unwrap()))
            .collect();
        for a in &modes {
            for b in &modes {
                let an = derivative_overlap(a, b, OverlapMethod::Analytic);
                let qu = derivative_overlap(a, b, OverlapMethod::Quadrature);
                assert!((an - qu).abs() < 1e-8 * (1.0 + an.abs()), "{an} vs {qu}");
            }
        }
    }
}
