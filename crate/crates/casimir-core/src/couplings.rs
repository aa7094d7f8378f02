//! Mode-coupling coefficients driven by the mirror velocity.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::{Branch, SystemConfig};
use crate::error::{CasimirError, Result};
use crate::motion::MotionLaw;
use crate::spectrum::{derivative_overlap, ModeSpectrum, OverlapMethod, SpectrumSolver};

/// Gamma = 1 - eta_1 / pi, exactly 1 for a perfect mirror.
pub fn gamma_factor(config: &SystemConfig) -> f64 {
    if config.is_ideal() {
        1.0
    } else {
        1.0 - config.eta1() / PI
    }
}

/// `int (d psi_a / d q) psi_b dx` at mirror position `q`; zero when `a` is a reservoir mode.
pub fn overlap_derivative(solver: &SpectrumSolver, q: f64, a: (Branch, usize), b: (Branch, usize), method: OverlapMethod) -> Result<f64> {
    if a.0 == Branch::Reservoir {
        return Ok(0.0);
    }
    let ma = solver.mode(a.0, a.1, q)?;
    let mb = solver.mode(b.0, b.1, q)?;
    Ok(derivative_overlap(&ma, &mb, method))
}

/// G_{kl}(t) = qdot(t) * int (d psi_k / d q) psi_l dx.
pub fn g_coefficient(solver: &SpectrumSolver, motion: &MotionLaw, t: f64, a: (Branch, usize), b: (Branch, usize)) -> Result<f64> {
    check_index(&solver.config, a)?;
    check_index(&solver.config, b)?;
    let qdot = motion.qdot(t);
    if qdot == 0.0 || a.0 == Branch::Reservoir {
        return Ok(0.0);
    }
    Ok(qdot * overlap_derivative(solver, motion.q(t), a, b, OverlapMethod::default())?)
}

fn check_index(cfg: &SystemConfig, (branch, k): (Branch, usize)) -> Result<()> {
    let cutoff = cfg.cutoff(branch);
    if k == 0 || k > cutoff {
        return Err(CasimirError::IndexOutOfRange { branch, k, cutoff });
    }
    Ok(())
}

/// Instantaneous coupling strengths over the configured cutoffs.
///
/// Matrices are indexed from zero: `mu_cc[(k-1, l-1)]`. Reservoir rows are
/// identically zero and therefore not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingTable {
    pub t: f64,
    pub q: f64,
    pub qdot: f64,
    pub xi: Vec<f64>,
    pub g_cc: DMatrix<f64>,
    pub g_cr: DMatrix<f64>,
    pub mu_cc: DMatrix<f64>,
    pub mu_cr: DMatrix<f64>,
}

/// xi_k and mu_kl at time `t`, evaluated directly from the eigenmodes.
pub fn strengths(solver: &SpectrumSolver, motion: &MotionLaw, t: f64) -> Result<CouplingTable> {
    let cfg = &solver.config;
    let (kc, kr) = (cfg.k_c, cfg.k_r);
    let q = motion.q(t);
    let qdot = motion.qdot(t);
    let cav: Vec<_> = (1..=kc).map(|k| solver.mode(Branch::Cavity, k, q)).collect::<Result<_>>()?;
    let res: Vec<_> = (1..=kr).map(|k| solver.mode(Branch::Reservoir, k, q)).collect::<Result<_>>()?;
    let method = OverlapMethod::default();
    let xi = cav.iter().map(|m| qdot * m.domega / (4.0 * m.omega)).collect();
    let mut g_cc = DMatrix::zeros(kc, kc);
    let mut mu_cc = DMatrix::zeros(kc, kc);
    let mut g_cr = DMatrix::zeros(kc, kr);
    let mut mu_cr = DMatrix::zeros(kc, kr);
    if qdot != 0.0 {
        for (i, a) in cav.iter().enumerate() {
            for (j, b) in cav.iter().enumerate() {
                if i != j {
                    let g = qdot * derivative_overlap(a, b, method);
                    g_cc[(i, j)] = g;
                    mu_cc[(i, j)] = 0.5 * (a.omega / b.omega).sqrt() * g;
                }
            }
            for (j, b) in res.iter().enumerate() {
                let g = qdot * derivative_overlap(a, b, method);
                g_cr[(i, j)] = g;
                mu_cr[(i, j)] = 0.5 * (a.omega / b.omega).sqrt() * g;
            }
        }
    }
    Ok(CouplingTable { t, q, qdot, xi, g_cc, g_cr, mu_cc, mu_cr })
}

/// Static matrix elements q0 * int (d psi_k^C / d q) psi_l dx and the factor Gamma.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCouplings {
    pub q0: f64,
    /// `m_cc[(k-1, l-1)]`; the diagonal is never used and left at zero.
    pub m_cc: DMatrix<f64>,
    pub m_cr: DMatrix<f64>,
    pub gamma_factor: f64,
    pub spectrum: ModeSpectrum,
    pub overlap: OverlapMethod,
}

impl EffectiveCouplings {
    pub fn k_c(&self) -> usize {
        self.m_cc.nrows()
    }

    pub fn k_r(&self) -> usize {
        self.m_cr.ncols()
    }

    pub fn m(&self, branch: Branch, k: usize, l: usize) -> Option<f64> {
        let (i, j) = (k.checked_sub(1)?, l.checked_sub(1)?);
        let m = match branch {
            Branch::Cavity => &self.m_cc,
            Branch::Reservoir => &self.m_cr,
        };
        (i < m.nrows() && j < m.ncols()).then(|| m[(i, j)])
    }

    pub fn kappa(&self) -> f64 {
        self.spectrum.kappa
    }

    /// Rows `(k, l, pair, value)` for export.
    pub fn rows(&self) -> Vec<CouplingRow> {
        let mut out = Vec::new();
        for i in 0..self.m_cc.nrows() {
            for j in 0..self.m_cc.ncols() {
                if i != j {
                    out.push(CouplingRow { k: i + 1, l: j + 1, pair: "CC".into(), value: self.m_cc[(i, j)] });
                }
            }
        }
        for i in 0..self.m_cr.nrows() {
            for j in 0..self.m_cr.ncols() {
                out.push(CouplingRow { k: i + 1, l: j + 1, pair: "CR".into(), value: self.m_cr[(i, j)] });
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingRow {
    pub k: usize,
    pub l: usize,
    pub pair: String,
    pub value: f64,
}

/// Matrix elements at the rest position `q0 = config.q0`.
pub fn effective_matrix_elements(solver: &SpectrumSolver, method: OverlapMethod) -> Result<EffectiveCouplings> {
    let cfg = &solver.config;
    let q0 = cfg.q0;
    let spectrum = solver.spectrum(q0)?;
    let cav: Vec<_> = (1..=cfg.k_c).map(|k| solver.mode(Branch::Cavity, k, q0)).collect::<Result<_>>()?;
    let res: Vec<_> = (1..=cfg.k_r).map(|k| solver.mode(Branch::Reservoir, k, q0)).collect::<Result<_>>()?;
    let m_cc = DMatrix::from_fn(cfg.k_c, cfg.k_c, |i, j| if i == j { 0.0 } else { q0 * derivative_overlap(&cav[i], &cav[j], method) });
    let m_cr = DMatrix::from_fn(cfg.k_c, cfg.k_r, |i, j| q0 * derivative_overlap(&cav[i], &res[j], method));
    Ok(EffectiveCouplings { q0, m_cc, m_cr, gamma_factor: gamma_factor(cfg), spectrum, overlap: method })
}

/// Chebyshev interpolant of a smooth function on `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chebyshev {
    lo: f64,
    hi: f64,
    coeffs: Vec<f64>,
}

impl Chebyshev {
    pub fn constant(v: f64) -> Self {
        Chebyshev { lo: 0.0, hi: 0.0, coeffs: vec![v] }
    }

    /// Fit with doubling degree until the trailing coefficients fall below `tol` relative.
    pub fn fit(mut f: impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, tol: f64) -> Result<Self> {
        if hi <= lo {
            return Ok(Self::constant(f(lo)?));
        }
        let mut n = 8;
        loop {
            let c = Self::coefficients(&mut f, lo, hi, n)?;
            let scale = c.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1e-300);
            let tail = c[n - 2].abs().max(c[n - 1].abs());
            if tail <= tol * scale {
                let mut coeffs = c;
                while coeffs.len() > 1 && coeffs.last().unwrap().abs() <= 1e-3 * tol * scale {
                    coeffs.pop();
                }
                return Ok(Chebyshev { lo, hi, coeffs });
            }
            if n >= 256 {
                return Err(CasimirError::NoConvergence { what: "chebyshev fit", iterations: n, residual: tail / scale });
            }
            n *= 2;
        }
    }

    fn coefficients(f: &mut impl FnMut(f64) -> Result<f64>, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
        let (mid, half) = (0.5 * (hi + lo), 0.5 * (hi - lo));
        let theta: Vec<f64> = (0..n).map(|j| PI * (j as f64 + 0.5) / n as f64).collect();
        let vals: Vec<f64> = theta.iter().map(|th| f(mid + half * th.cos())).collect::<Result<_>>()?;
        Ok((0..n)
            .map(|i| {
                let s: f64 = vals.iter().zip(&theta).map(|(v, th)| v * (i as f64 * th).cos()).sum();
                s * if i == 0 { 1.0 } else { 2.0 } / n as f64
            })
            .collect())
    }

    pub fn eval(&self, x: f64) -> f64 {
        if self.coeffs.len() == 1 {
            return self.coeffs[0];
        }
        let u = (2.0 * x - self.lo - self.hi) / (self.hi - self.lo);
        let (mut b1, mut b2) = (0.0, 0.0);
        for c in self.coeffs.iter().skip(1).rev() {
            let b0 = 2.0 * u * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        u * b1 - b2 + self.coeffs[0]
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
}

/// How a [`CouplingModel`] follows the mirror position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum QDependence {
    /// Rest-position values carried along by first-order scaling laws:
    /// omega ~ 1/(q + 1/gamma), overlaps ~ 1/q. Immune to the avoided
    /// crossings a moving mirror sweeps through diabatically.
    #[default]
    RestScaled,
    /// Chebyshev fits of the solver's own q-dependence.
    Interpolated,
}

#[derive(Debug, Clone, PartialEq)]
enum QFunction {
    /// v0 * ((q0 + shift) / (q + shift))^power
    Scaled { v0: f64, q0: f64, shift: f64, power: i32 },
    Fitted(Chebyshev),
}

impl QFunction {
    fn eval(&self, q: f64) -> f64 {
        match self {
            QFunction::Scaled { v0, q0, shift, power } => v0 * ((q0 + shift) / (q + shift)).powi(*power),
            QFunction::Fitted(c) => c.eval(q),
        }
    }
}

/// Which ordered mode pairs a [`CouplingModel`] precomputes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PairSelection {
    /// Pairs touching one cavity mode: (k, any) and (any cavity, k).
    Mode(usize),
    /// Every pair among the listed modes.
    Modes(Vec<(Branch, usize)>),
}

type PairKey = (usize, Branch, usize);

/// Couplings along the mirror excursion of a trajectory.
///
/// Cavity frequencies, their q-derivatives and the derivative overlaps are
/// precomputed as functions of q (see [`QDependence`]), so evaluating xi and
/// mu along a trajectory costs no root solves. Reservoir frequencies are held
/// at their rest values.
#[derive(Debug, Clone)]
pub struct CouplingModel {
    pub solver: SpectrumSolver,
    pub q_range: (f64, f64),
    pub overlap: OverlapMethod,
    pub q_dependence: QDependence,
    omega_c: Vec<QFunction>,
    domega_c: Vec<QFunction>,
    omega_r: Vec<f64>,
    pairs: BTreeMap<PairKey, QFunction>,
}

const FIT_TOL: f64 = 1e-13;

impl CouplingModel {
    pub fn new(
        solver: SpectrumSolver,
        q_range: (f64, f64),
        selection: PairSelection,
        overlap: OverlapMethod,
        q_dependence: QDependence,
    ) -> Result<Self> {
        let cfg = solver.config;
        cfg.validate()?;
        let (lo, hi) = q_range;
        if !(lo > 0.0 && hi >= lo) {
            return Err(CasimirError::InvalidMotion(format!("invalid mirror range [{lo}, {hi}]")));
        }
        let q0 = cfg.q0;
        let shift = cfg.inv_gamma();
        let fitted = q_dependence == QDependence::Interpolated;
        let mut omega_c = Vec::with_capacity(cfg.k_c);
        let mut domega_c = Vec::with_capacity(cfg.k_c);
        for k in 1..=cfg.k_c {
            if fitted {
                omega_c.push(QFunction::Fitted(Chebyshev::fit(|q| solver.omega(Branch::Cavity, k, q), lo, hi, FIT_TOL)?));
                domega_c.push(QFunction::Fitted(Chebyshev::fit(
                    |q| Ok(solver.eigenmode(Branch::Cavity, k, q)?.domega_dq),
                    lo,
                    hi,
                    FIT_TOL,
                )?));
            } else {
                let w0 = solver.omega(Branch::Cavity, k, q0)?;
                omega_c.push(QFunction::Scaled { v0: w0, q0, shift, power: 1 });
                domega_c.push(QFunction::Scaled { v0: -w0 / (q0 + shift), q0, shift, power: 2 });
            }
        }
        let omega_r = solver.frequencies(Branch::Reservoir, cfg.q0, cfg.k_r)?;

        let mut keys: Vec<PairKey> = Vec::new();
        match &selection {
            PairSelection::Mode(k) => {
                check_index(&cfg, (Branch::Cavity, *k))?;
                for l in 1..=cfg.k_c {
                    if l != *k {
                        keys.push((*k, Branch::Cavity, l));
                        keys.push((l, Branch::Cavity, *k));
                    }
                }
                for l in 1..=cfg.k_r {
                    keys.push((*k, Branch::Reservoir, l));
                }
            }
            PairSelection::Modes(modes) => {
                for a in modes {
                    check_index(&cfg, *a)?;
                }
                for a in modes.iter().filter(|a| a.0 == Branch::Cavity) {
                    for b in modes {
                        if a != b {
                            keys.push((a.1, b.0, b.1));
                        }
                    }
                }
            }
        }
        let mut pairs = BTreeMap::new();
        for key in keys {
            let (k, b, l) = key;
            let d = |q| overlap_derivative(&solver, q, (Branch::Cavity, k), (b, l), overlap);
            let fit = if fitted {
                QFunction::Fitted(Chebyshev::fit(d, lo, hi, FIT_TOL)?)
            } else {
                QFunction::Scaled { v0: d(q0)?, q0, shift: 0.0, power: 1 }
            };
            pairs.insert(key, fit);
        }
        Ok(CouplingModel { solver, q_range, overlap, q_dependence, omega_c, domega_c, omega_r, pairs })
    }

    /// Model covering the excursion of `motion` over `[0, t_max]`.
    pub fn for_motion(solver: SpectrumSolver, motion: &MotionLaw, t_max: f64, selection: PairSelection) -> Result<Self> {
        Self::new(solver, motion.q_range(t_max), selection, OverlapMethod::default(), QDependence::default())
    }

    pub fn config(&self) -> &SystemConfig {
        &self.solver.config
    }

    pub fn omega(&self, branch: Branch, k: usize, q: f64) -> f64 {
        match branch {
            Branch::Cavity => self.omega_c[k - 1].eval(q),
            Branch::Reservoir => self.omega_r[k - 1],
        }
    }

    /// Rest-position frequency.
    pub fn omega0(&self, branch: Branch, k: usize) -> f64 {
        self.omega(branch, k, self.config().q0)
    }

    pub fn domega(&self, k: usize, q: f64) -> f64 {
        self.domega_c[k - 1].eval(q)
    }

    /// Derivative overlap for a precomputed pair; `None` if it was not selected.
    pub fn overlap_at(&self, k: usize, b: Branch, l: usize, q: f64) -> Option<f64> {
        self.pairs.get(&(k, b, l)).map(|c| c.eval(q))
    }

    pub fn has_pair(&self, k: usize, b: Branch, l: usize) -> bool {
        self.pairs.contains_key(&(k, b, l))
    }

    /// xi_k^C at mirror state (q, qdot).
    pub fn xi(&self, k: usize, q: f64, qdot: f64) -> f64 {
        qdot * self.domega(k, q) / (4.0 * self.omega(Branch::Cavity, k, q))
    }

    /// mu_{kl}^{C S} at mirror state (q, qdot); zero for the diagonal and unselected pairs.
    pub fn mu(&self, k: usize, b: Branch, l: usize, q: f64, qdot: f64) -> f64 {
        if b == Branch::Cavity && k == l {
            return 0.0;
        }
        match self.overlap_at(k, b, l, q) {
            Some(d) => 0.5 * (self.omega(Branch::Cavity, k, q) / self.omega(b, l, q)).sqrt() * qdot * d,
            None => 0.0,
        }
    }

    /// zeta_{lk} = xi_k delta_{lk} + mu_{kl}^{CC}.
    pub fn zeta(&self, l: usize, k: usize, q: f64, qdot: f64) -> f64 {
        if l == k {
            self.xi(k, q, qdot)
        } else {
            self.mu(k, Branch::Cavity, l, q, qdot)
        }
    }

    pub fn kappa(&self) -> f64 {
        self.omega0(Branch::Reservoir, 1) / self.omega0(Branch::Cavity, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chebyshev_reproduces_smooth_function() {
        let c = Chebyshev::fit(|x| Ok((3.0 * x).sin() / x), 0.9, 1.1, 1e-14).unwrap();
        for x in [0.9, 0.95, 1.0, 1.07, 1.1] {
            assert!((c.eval(x) - (3.0 * x).sin() / x).abs() < 1e-13);
        }
    }

    #[test]
    fn gamma_factor_limits() {
        let cfg = SystemConfig::default();
        assert_eq!(gamma_factor(&cfg.ideal()), 1.0);
        let g = gamma_factor(&cfg.with_gamma(100.0 * PI));
        assert!(g < 1.0 && g > 0.99);
    }
}
