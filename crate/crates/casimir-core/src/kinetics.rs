//! Average photon creation: general double-time integral, ideal-cavity vacuum
//! integral and the closed resonant form.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Branch;
use crate::couplings::{CouplingModel, EffectiveCouplings};
use crate::error::{CasimirError, Result};
use crate::fock::{self, CMatrix};
use crate::motion::{FrequencyProvider, MotionLaw, PhaseOrder};
use crate::quadrature::TimeGrid;

pub const DEGENERATE: &str = "degenerate";
pub const PAIR_CC: &str = "pair_CC";
pub const SCATTER_CC: &str = "scatter_CC";
pub const PAIR_CR: &str = "pair_CR";
pub const SCATTER_CR: &str = "scatter_CR";

/// Channel name -> contribution.
pub type Channels = BTreeMap<String, f64>;

fn empty_channels(names: &[&str]) -> Channels {
    names.iter().map(|n| (n.to_string(), 0.0)).collect()
}

fn add(ch: &mut Channels, name: &str, v: f64) {
    *ch.entry(name.to_string()).or_insert(0.0) += v;
}

/// Bose occupation 1/(e^{omega/T} - 1); zero at T = 0.
pub fn thermal_occupation(omega: f64, temperature: f64) -> f64 {
    if temperature <= 0.0 {
        0.0
    } else {
        1.0 / (omega / temperature).exp_m1()
    }
}

/// Initial state of the selected cavity mode.
#[derive(Debug, Clone, PartialEq)]
pub enum StateDescriptor {
    Vacuum,
    Thermal { mean: f64 },
    /// Even cat N(|alpha> + |-alpha>).
    Cat { alpha: Complex64 },
    DensityMatrix(CMatrix),
}

impl StateDescriptor {
    /// Tr(rho a^dag a), exact for every descriptor.
    pub fn mean_occupation(&self) -> f64 {
        match self {
            StateDescriptor::Vacuum => 0.0,
            StateDescriptor::Thermal { mean } => *mean,
            StateDescriptor::Cat { alpha } => {
                let a2 = alpha.norm_sqr();
                a2 * a2.tanh()
            }
            StateDescriptor::DensityMatrix(rho) => {
                let n = rho.nrows() - 1;
                fock::trace(&(rho * fock::number(n))).re
            }
        }
    }

    /// Density matrix in a Fock basis that holds the state to 1e-12.
    pub fn density_matrix(&self) -> Result<CMatrix> {
        Ok(match self {
            StateDescriptor::Vacuum => fock::thermal(0.0, 1e-16),
            StateDescriptor::Thermal { mean } => fock::thermal(*mean, 1e-16),
            StateDescriptor::Cat { alpha } => {
                let n = fock::cat_cutoff(*alpha, 1e-14)?;
                fock::projector(&fock::even_cat(*alpha, n).0)
            }
            StateDescriptor::DensityMatrix(rho) => rho.clone(),
        })
    }

    /// 1 - Tr rho^2.
    pub fn linear_entropy(&self) -> Result<f64> {
        Ok(match self {
            StateDescriptor::Vacuum | StateDescriptor::Cat { .. } => 0.0,
            StateDescriptor::Thermal { mean } => 1.0 - 1.0 / (2.0 * mean + 1.0),
            StateDescriptor::DensityMatrix(rho) => 1.0 - fock::trace(&(rho * rho)).re,
        })
    }
}

/// Occupations of every mode plus the full state of the selected one.
///
/// Spectator modes enter only through their mean occupations, so they are
/// phase-invariant by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeState {
    pub occupations_c: Vec<f64>,
    pub occupations_r: Vec<f64>,
    pub selected: usize,
    pub descriptor: StateDescriptor,
}

impl ModeState {
    /// Everything in vacuum.
    pub fn vacuum(selected: usize, k_c: usize, k_r: usize) -> Result<Self> {
        Self::new(vec![0.0; k_c], vec![0.0; k_r], selected, StateDescriptor::Vacuum)
    }

    /// Every mode thermal at `temperature` with the model's rest frequencies.
    pub fn thermal(model: &CouplingModel, selected: usize, temperature: f64) -> Result<Self> {
        let cfg = model.config();
        let occ_c: Vec<f64> = (1..=cfg.k_c).map(|l| thermal_occupation(model.omega0(Branch::Cavity, l), temperature)).collect();
        let occ_r = (1..=cfg.k_r).map(|l| thermal_occupation(model.omega0(Branch::Reservoir, l), temperature)).collect();
        let mean = occ_c.get(selected.wrapping_sub(1)).copied().unwrap_or(0.0);
        let d = if mean > 0.0 { StateDescriptor::Thermal { mean } } else { StateDescriptor::Vacuum };
        Self::new(occ_c, occ_r, selected, d)
    }

    /// Thermal occupations from a frequency table (e.g. an [`EffectiveCouplings`] spectrum).
    pub fn thermal_from_frequencies(omega_c: &[f64], omega_r: &[f64], selected: usize, temperature: f64) -> Result<Self> {
        let occ_c: Vec<f64> = omega_c.iter().map(|w| thermal_occupation(*w, temperature)).collect();
        let occ_r = omega_r.iter().map(|w| thermal_occupation(*w, temperature)).collect();
        let mean = occ_c.get(selected.wrapping_sub(1)).copied().unwrap_or(0.0);
        let d = if mean > 0.0 { StateDescriptor::Thermal { mean } } else { StateDescriptor::Vacuum };
        Self::new(occ_c, occ_r, selected, d)
    }

    /// The selected mode's occupation is taken from `descriptor`.
    pub fn new(mut occupations_c: Vec<f64>, occupations_r: Vec<f64>, selected: usize, descriptor: StateDescriptor) -> Result<Self> {
        if selected == 0 || selected > occupations_c.len() {
            return Err(CasimirError::IndexOutOfRange { branch: Branch::Cavity, k: selected, cutoff: occupations_c.len() });
        }
        if occupations_c.iter().chain(&occupations_r).any(|n| !(*n >= 0.0 && n.is_finite())) {
            return Err(CasimirError::InvalidState("occupations must be finite and >= 0".into()));
        }
        match &descriptor {
            StateDescriptor::Thermal { mean } if !(*mean >= 0.0 && mean.is_finite()) => {
                return Err(CasimirError::InvalidState(format!("thermal mean {mean} must be finite and >= 0")));
            }
            StateDescriptor::Cat { alpha } if !(alpha.re.is_finite() && alpha.im.is_finite()) => {
                return Err(CasimirError::InvalidState("cat amplitude must be finite".into()));
            }
            StateDescriptor::DensityMatrix(rho) => fock::validate_density_matrix(rho, 1e-10)?,
            _ => {}
        }
        occupations_c[selected - 1] = descriptor.mean_occupation();
        Ok(ModeState { occupations_c, occupations_r, selected, descriptor })
    }

    /// Replace a spectator's state; only Fock-diagonal states are accepted.
    pub fn with_spectator(mut self, branch: Branch, l: usize, rho: &CMatrix) -> Result<Self> {
        fock::validate_density_matrix(rho, 1e-10)?;
        let off = (0..rho.nrows())
            .flat_map(|i| (0..rho.ncols()).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .fold(0.0_f64, |m, (i, j)| m.max(rho[(i, j)].norm()));
        if off > 1e-10 {
            return Err(CasimirError::InvalidState(format!(
                "spectator {branch}{l} carries Fock coherences ({off:.3e}); cross-mode moments would not factorize"
            )));
        }
        if branch == Branch::Cavity && l == self.selected {
            return Err(CasimirError::InvalidState("use the descriptor for the selected mode".into()));
        }
        let n = rho.nrows() - 1;
        let mean = fock::trace(&(rho * fock::number(n))).re;
        let occ = match branch {
            Branch::Cavity => &mut self.occupations_c,
            Branch::Reservoir => &mut self.occupations_r,
        };
        let cutoff = occ.len();
        *occ.get_mut(l.wrapping_sub(1)).ok_or(CasimirError::IndexOutOfRange { branch, k: l, cutoff })? = mean;
        Ok(self)
    }

    /// Same occupations, different selected mode (thermal/vacuum descriptor).
    pub fn retarget(&self, k: usize) -> Result<Self> {
        let mean = self.occupations_c.get(k.wrapping_sub(1)).copied().unwrap_or(0.0);
        let d = if mean > 0.0 { StateDescriptor::Thermal { mean } } else { StateDescriptor::Vacuum };
        Self::new(self.occupations_c.clone(), self.occupations_r.clone(), k, d)
    }

    /// N_{S,l}(0); zero beyond the stored cutoff.
    pub fn occupation(&self, branch: Branch, l: usize) -> f64 {
        let v = match branch {
            Branch::Cavity => &self.occupations_c,
            Branch::Reservoir => &self.occupations_r,
        };
        l.checked_sub(1).and_then(|i| v.get(i)).copied().unwrap_or(0.0)
    }

    pub fn selected_occupation(&self) -> f64 {
        self.occupations_c[self.selected - 1]
    }
}

/// Sign and phase conventions of the f, g and cavity–reservoir kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum KernelConvention {
    /// f = -2N cos(D) - e^{-iD}, g = 2iN sin(D) - e^{-iD}; the CR kernel
    /// uses D_l^C and N_{C,l}.
    AsPrinted,
    /// f = -(N+1) e^{iD} - N e^{-iD}, g = -(N+1) e^{iD} + N e^{-iD}; the CR
    /// kernel uses D_k^C and N_{R,l} with the opposite overall sign. Agrees
    /// with the truncated Fock-space integrator and with the closed form.
    #[default]
    OracleAdjudicated,
}

impl KernelConvention {
    /// (f+, f-) with f = f+ e^{iD} + f- e^{-iD}.
    fn f_coeffs(self, n: f64) -> (f64, f64) {
        match self {
            KernelConvention::AsPrinted => (-n, -n - 1.0),
            KernelConvention::OracleAdjudicated => (-n - 1.0, -n),
        }
    }

    fn g_coeffs(self, n: f64) -> (f64, f64) {
        match self {
            KernelConvention::AsPrinted => (n, -n - 1.0),
            KernelConvention::OracleAdjudicated => (-n - 1.0, n),
        }
    }

    pub fn f(self, n: f64, delta: f64) -> Complex64 {
        let (p, m) = self.f_coeffs(n);
        Complex64::from_polar(p, delta) + Complex64::from_polar(m, -delta)
    }

    pub fn g(self, n: f64, delta: f64) -> Complex64 {
        let (p, m) = self.g_coeffs(n);
        Complex64::from_polar(p, delta) + Complex64::from_polar(m, -delta)
    }
}

/// Cavity frequency for any index; beyond the model cutoff the first-order
/// law l * omega_1 is used.
fn cavity_omega(model: &CouplingModel, l: usize, q: f64) -> f64 {
    if l <= model.config().k_c {
        model.omega(Branch::Cavity, l, q)
    } else {
        l as f64 * model.omega(Branch::Cavity, 1, q)
    }
}

impl FrequencyProvider for CouplingModel {
    fn frequency(&self, branch: Branch, k: usize, q: f64) -> Result<f64> {
        Ok(match branch {
            Branch::Cavity => cavity_omega(self, k, q),
            Branch::Reservoir => self.omega(branch, k, q),
        })
    }
}

/// Kernel functions at one pair of times, evaluated term by term.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBundle {
    pub delta_c: Vec<f64>,
    pub delta_r: Vec<f64>,
    pub f_c: Vec<Complex64>,
    pub f_r: Vec<Complex64>,
    pub g: Vec<Complex64>,
    pub xi_plus: Vec<f64>,
    pub xi_minus: Vec<f64>,
    pub upsilon_plus: Vec<f64>,
    pub upsilon_minus: Vec<f64>,
    /// Photon-number kernel summed over cavity modes.
    pub cavity_kernel: Complex64,
    /// Photon-number kernel summed over reservoir modes.
    pub reservoir_kernel: Complex64,
}

fn phase_at(model: &CouplingModel, motion: &MotionLaw, branch: Branch, l: usize, t: f64, order: PhaseOrder) -> Result<f64> {
    crate::motion::phase(motion, model, branch, l, t, order)
}

/// Literal kernels at (t, s), `0 <= s <= t`, for the selected mode of `state`.
pub fn kernels(
    state: &ModeState,
    model: &CouplingModel,
    motion: &MotionLaw,
    t: f64,
    s: f64,
    convention: KernelConvention,
    order: PhaseOrder,
) -> Result<KernelBundle> {
    if !(0.0 <= s && s <= t) {
        return Err(CasimirError::InvalidConfig(format!("kernels need 0 <= s <= t, got s={s}, t={t}")));
    }
    let cfg = model.config();
    let k = state.selected;
    let (qt, qs) = (motion.q(t), motion.q(s));
    let (vt, vs) = (motion.qdot(t), motion.qdot(s));
    let nk = state.selected_occupation();
    let dk = phase_at(model, motion, Branch::Cavity, k, t, order)? - phase_at(model, motion, Branch::Cavity, k, s, order)?;
    let kc = cfg.k_c;
    let mut b = KernelBundle {
        delta_c: Vec::with_capacity(kc),
        delta_r: Vec::with_capacity(cfg.k_r),
        f_c: Vec::with_capacity(kc),
        f_r: Vec::with_capacity(cfg.k_r),
        g: Vec::with_capacity(kc),
        xi_plus: Vec::with_capacity(kc),
        xi_minus: Vec::with_capacity(kc),
        upsilon_plus: Vec::with_capacity(kc),
        upsilon_minus: Vec::with_capacity(kc),
        cavity_kernel: Complex64::new(0.0, 0.0),
        reservoir_kernel: Complex64::new(0.0, 0.0),
    };
    let i = Complex64::i();
    for l in 1..=kc {
        let d = phase_at(model, motion, Branch::Cavity, l, t, order)? - phase_at(model, motion, Branch::Cavity, l, s, order)?;
        let nl = state.occupation(Branch::Cavity, l);
        let f = convention.f(nl, d);
        let g = convention.g(nl, d);
        let (zlk_t, zlk_s) = (model.zeta(l, k, qt, vt), model.zeta(l, k, qs, vs));
        let (zkl_t, zkl_s) = (model.zeta(k, l, qt, vt), model.zeta(k, l, qs, vs));
        let xp = zlk_t * zlk_s + zkl_t * zkl_s;
        let xm = zlk_t * zlk_s - zkl_t * zkl_s;
        let up = zlk_t * zkl_s + zkl_t * zlk_s;
        let um = zlk_t * zkl_s - zkl_t * zlk_s;
        b.cavity_kernel += nk * (f * xp - g * up) * (-i * dk).exp() - (nk + 1.0) * (f * xp + g * up) * (i * dk).exp();
        b.delta_c.push(d);
        b.f_c.push(f);
        b.g.push(g);
        b.xi_plus.push(xp);
        b.xi_minus.push(xm);
        b.upsilon_plus.push(up);
        b.upsilon_minus.push(um);
    }
    for l in 1..=cfg.k_r {
        let dr = phase_at(model, motion, Branch::Reservoir, l, t, order)? - phase_at(model, motion, Branch::Reservoir, l, s, order)?;
        let nr = state.occupation(Branch::Reservoir, l);
        b.delta_r.push(dr);
        b.f_r.push(convention.f(nr, dr));
        let mm = model.mu(k, Branch::Reservoir, l, qt, vt) * model.mu(k, Branch::Reservoir, l, qs, vs);
        if mm == 0.0 {
            continue;
        }
        let bracket = match convention {
            KernelConvention::AsPrinted => {
                let dl = phase_at(model, motion, Branch::Cavity, l, t, order)? - phase_at(model, motion, Branch::Cavity, l, s, order)?;
                let ncl = state.occupation(Branch::Cavity, l);
                (2.0 * nk + 1.0) * dl.sin() * dr.sin() - (2.0 * ncl + 1.0) * dl.cos() * dr.cos()
            }
            KernelConvention::OracleAdjudicated => (2.0 * nr + 1.0) * dk.cos() * dr.cos() - (2.0 * nk + 1.0) * dk.sin() * dr.sin(),
        };
        b.reservoir_kernel += Complex64::new(mm * bracket, 0.0);
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KineticsMethod {
    GeneralIntegral,
    IdealVacuum,
    ResonantClosedForm,
}

/// Photon-number change of one cavity mode with its channel breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticsResult {
    pub k: usize,
    pub p: Option<f64>,
    /// Dimensionless time epsilon * omega_1 * t, when the motion is sinusoidal.
    pub tau: Option<f64>,
    pub t: f64,
    pub delta_n: f64,
    pub channels: Channels,
    pub method: KineticsMethod,
    /// Estimated contribution of modes beyond the cutoffs.
    pub tail_estimate: Option<f64>,
    /// Grid refinement error estimate of the double integral.
    pub quadrature_error: Option<f64>,
    pub notes: Vec<String>,
}

impl KineticsResult {
    pub fn channel(&self, name: &str) -> f64 {
        self.channels.get(name).copied().unwrap_or(0.0)
    }
}

/// Accuracy controls for the double-time integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralOptions {
    pub convention: KernelConvention,
    pub phase_order: PhaseOrder,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Gauss–Legendre order per panel.
    pub order: usize,
    /// Panel width as a fraction of the fastest oscillation period.
    pub panel_fraction: f64,
    pub max_refinements: usize,
    pub include_reservoir: bool,
    /// Truncation tails above this fraction of |result| produce a note.
    pub tail_tolerance: f64,
}

impl Default for GeneralOptions {
    fn default() -> Self {
        GeneralOptions {
            convention: KernelConvention::default(),
            phase_order: PhaseOrder::ZerothInEpsilon,
            rel_tol: 1e-6,
            abs_tol: 1e-15,
            order: 8,
            panel_fraction: 1.0 / 20.0,
            max_refinements: 6,
            include_reservoir: true,
            tail_tolerance: 1e-3,
        }
    }
}

fn tau_of(motion: &MotionLaw, t: f64) -> Option<f64> {
    match motion {
        MotionLaw::Sinusoidal { epsilon, omega1, .. } => Some(epsilon * omega1 * t),
        _ => None,
    }
}

fn p_of(motion: &MotionLaw) -> Option<f64> {
    match motion {
        MotionLaw::Sinusoidal { p, .. } => Some(*p),
        _ => None,
    }
}

/// Result of one grid evaluation: channel totals plus per-mode magnitudes used for tails.
pub(crate) struct GridEval {
    pub channels: Channels,
    pub per_mode_c: Vec<f64>,
    pub per_mode_r: Vec<f64>,
}

impl GridEval {
    fn total(&self) -> f64 {
        self.channels.values().sum()
    }
}

/// Refine the grid until two successive totals agree.
pub(crate) fn converge(
    t: f64,
    fastest: f64,
    opts: &GeneralOptions,
    mut eval: impl FnMut(&TimeGrid) -> Result<GridEval>,
) -> Result<(GridEval, f64)> {
    let width = opts.panel_fraction * 2.0 * PI / fastest.max(1e-12);
    let mut panels = ((t / width).ceil() as usize).max(1);
    let mut prev = eval(&TimeGrid::new(t, panels, opts.order))?;
    for _ in 0..opts.max_refinements {
        panels *= 2;
        let next = eval(&TimeGrid::new(t, panels, opts.order))?;
        let (a, b) = (prev.total(), next.total());
        let err = (b - a).abs();
        let scale = next.channels.values().fold(0.0_f64, |m, v| m.max(v.abs()));
        if err <= opts.rel_tol * scale + opts.abs_tol {
            return Ok((next, err));
        }
        prev = next;
    }
    let (a, b) = (0.0, prev.total());
    Err(CasimirError::Quadrature { a, b, error: f64::NAN, tolerance: opts.rel_tol })
}

/// Geometric extrapolation of the per-mode magnitudes beyond the last index.
pub(crate) fn tail(per_mode: &[f64]) -> f64 {
    let n = per_mode.len();
    if n < 2 {
        return per_mode.last().copied().unwrap_or(0.0).abs();
    }
    let (a, b) = (per_mode[n - 2].abs(), per_mode[n - 1].abs());
    if b == 0.0 {
        return 0.0;
    }
    if a > b {
        let r = b / a;
        b * r / (1.0 - r)
    } else {
        b * n as f64
    }
}

/// Phase samples of mode (branch, l) on the grid.
pub(crate) fn phases(grid: &TimeGrid, model: &CouplingModel, qs: &[f64], branch: Branch, l: usize, order: PhaseOrder) -> Vec<f64> {
    let q0 = model.config().q0;
    if order == PhaseOrder::ZerothInEpsilon || branch == Branch::Reservoir {
        let w = match branch {
            Branch::Cavity => cavity_omega(model, l, q0),
            Branch::Reservoir => model.omega0(branch, l),
        };
        grid.nodes.iter().map(|t| w * t).collect()
    } else {
        let w: Vec<f64> = qs.iter().map(|q| cavity_omega(model, l, *q)).collect();
        grid.cumulative(&w)
    }
}

/// Integral of x(u) e^{i phi(u)} y(s) e^{-i phi(s)} over 0 <= s <= u <= t.
pub(crate) fn separable(grid: &TimeGrid, x: &[f64], y: &[f64], phi: &[f64]) -> Complex64 {
    let e: Vec<Complex64> = phi.iter().map(|p| Complex64::from_polar(1.0, *p)).collect();
    let outer: Vec<Complex64> = x.iter().zip(&e).map(|(v, e)| e * v).collect();
    let inner: Vec<Complex64> = y.iter().zip(&e).map(|(v, e)| e.conj() * v).collect();
    grid.triangle(&outer, &inner)
}

fn check_model_for(model: &CouplingModel, k: usize, reservoir: bool) -> Result<()> {
    let cfg = model.config();
    if k == 0 || k > cfg.k_c {
        return Err(CasimirError::IndexOutOfRange { branch: Branch::Cavity, k, cutoff: cfg.k_c });
    }
    for l in (1..=cfg.k_c).filter(|l| *l != k) {
        if !model.has_pair(k, Branch::Cavity, l) || !model.has_pair(l, Branch::Cavity, k) {
            return Err(CasimirError::InvalidConfig(format!("coupling model lacks the cavity pair ({k},{l})")));
        }
    }
    if reservoir && cfg.k_r > 0 && !model.has_pair(k, Branch::Reservoir, 1) {
        return Err(CasimirError::InvalidConfig(format!("coupling model lacks cavity–reservoir pairs for mode {k}")));
    }
    Ok(())
}

pub(crate) fn fastest_rate(model: &CouplingModel, motion: &MotionLaw, k: usize, reservoir: bool) -> f64 {
    let cfg = model.config();
    let wk = model.omega0(Branch::Cavity, k);
    let mut w = wk + model.omega0(Branch::Cavity, cfg.k_c);
    if reservoir && cfg.k_r > 0 {
        w = w.max(wk + model.omega0(Branch::Reservoir, cfg.k_r));
    }
    w + motion.drive_rate()
}

/// 2 Re of the photon-number double integral for arbitrary motion.
pub fn delta_n_general(state: &ModeState, model: &CouplingModel, motion: &MotionLaw, t: f64, opts: &GeneralOptions) -> Result<KineticsResult> {
    let k = state.selected;
    check_model_for(model, k, opts.include_reservoir)?;
    if !(t >= 0.0) {
        return Err(CasimirError::InvalidConfig(format!("t must be >= 0, got {t}")));
    }
    let names = [DEGENERATE, PAIR_CC, SCATTER_CC, PAIR_CR, SCATTER_CR];
    let base = KineticsResult {
        k,
        p: p_of(motion),
        tau: tau_of(motion, t),
        t,
        delta_n: 0.0,
        channels: empty_channels(&names),
        method: KineticsMethod::GeneralIntegral,
        tail_estimate: Some(0.0),
        quadrature_error: Some(0.0),
        notes: Vec::new(),
    };
    if motion.is_static() || t == 0.0 {
        return Ok(base);
    }
    let cfg = *model.config();
    let nk = state.selected_occupation();
    let conv = opts.convention;
    let eval = |grid: &TimeGrid| -> Result<GridEval> {
        let qs: Vec<f64> = grid.nodes.iter().map(|s| motion.q(*s)).collect();
        let vs: Vec<f64> = grid.nodes.iter().map(|s| motion.qdot(*s)).collect();
        let om_k = phases(grid, model, &qs, Branch::Cavity, k, opts.phase_order);
        let mut ch = empty_channels(&names);
        let mut per_c = Vec::with_capacity(cfg.k_c);
        for l in 1..=cfg.k_c {
            let a: Vec<f64> = qs.iter().zip(&vs).map(|(q, v)| model.zeta(l, k, *q, *v)).collect();
            let b: Vec<f64> = qs.iter().zip(&vs).map(|(q, v)| model.zeta(k, l, *q, *v)).collect();
            let om_l = phases(grid, model, &qs, Branch::Cavity, l, opts.phase_order);
            let nl = state.occupation(Branch::Cavity, l);
            let (fp, fm) = conv.f_coeffs(nl);
            let (gp, gm) = conv.g_coeffs(nl);
            let mut mode_total = 0.0;
            for (sigma, fs, gs) in [(1.0, fp, gp), (-1.0, fm, gm)] {
                for rho in [1.0, -1.0] {
                    let (cx, cu) = if rho < 0.0 { (nk * fs, -nk * gs) } else { (-(nk + 1.0) * fs, -(nk + 1.0) * gs) };
                    if cx == 0.0 && cu == 0.0 {
                        continue;
                    }
                    let phi: Vec<f64> = om_l.iter().zip(&om_k).map(|(x, y)| sigma * x + rho * y).collect();
                    let xi = separable(grid, &a, &a, &phi) + separable(grid, &b, &b, &phi);
                    let up = separable(grid, &a, &b, &phi) + separable(grid, &b, &a, &phi);
                    let v = 2.0 * (xi * cx + up * cu).re;
                    let name = if l == k {
                        DEGENERATE
                    } else if sigma == rho {
                        PAIR_CC
                    } else {
                        SCATTER_CC
                    };
                    add(&mut ch, name, v);
                    if l != k {
                        mode_total += v;
                    }
                }
            }
            per_c.push(mode_total);
        }
        let mut per_r = Vec::new();
        if opts.include_reservoir {
            for l in 1..=cfg.k_r {
                let m: Vec<f64> = qs.iter().zip(&vs).map(|(q, v)| model.mu(k, Branch::Reservoir, l, *q, *v)).collect();
                if m.iter().all(|v| *v == 0.0) {
                    per_r.push(0.0);
                    continue;
                }
                let om_r = phases(grid, model, &qs, Branch::Reservoir, l, opts.phase_order);
                // alpha sin(a) sin(b) + beta cos(a) cos(b)
                let (alpha, beta, om_a) = match conv {
                    KernelConvention::AsPrinted => {
                        let ncl = state.occupation(Branch::Cavity, l);
                        (2.0 * nk + 1.0, -(2.0 * ncl + 1.0), phases(grid, model, &qs, Branch::Cavity, l, opts.phase_order))
                    }
                    KernelConvention::OracleAdjudicated => {
                        let nr = state.occupation(Branch::Reservoir, l);
                        (-(2.0 * nk + 1.0), 2.0 * nr + 1.0, om_k.clone())
                    }
                };
                let sum: Vec<f64> = om_a.iter().zip(&om_r).map(|(x, y)| x + y).collect();
                let diff: Vec<f64> = om_a.iter().zip(&om_r).map(|(x, y)| x - y).collect();
                let vp = 2.0 * (0.5 * (beta - alpha)) * separable(grid, &m, &m, &sum).re;
                let vs_ = 2.0 * (0.5 * (alpha + beta)) * separable(grid, &m, &m, &diff).re;
                add(&mut ch, PAIR_CR, vp);
                add(&mut ch, SCATTER_CR, vs_);
                per_r.push(vp + vs_);
            }
        }
        Ok(GridEval { channels: ch, per_mode_c: per_c, per_mode_r: per_r })
    };
    let fastest = fastest_rate(model, motion, k, opts.include_reservoir);
    let (res, err) = converge(t, fastest, opts, eval)?;
    let delta_n: f64 = res.channels.values().sum();
    let tail_c = tail(&res.per_mode_c);
    let tail_r = tail(&res.per_mode_r);
    let tail_total = tail_c + tail_r;
    let mut notes = Vec::new();
    if tail_total > opts.tail_tolerance * delta_n.abs() {
        notes.push(format!("mode-sum truncation tail {tail_total:.3e} exceeds {:.1e} of the result", opts.tail_tolerance));
    }
    Ok(KineticsResult { delta_n, channels: res.channels, tail_estimate: Some(tail_total), quadrature_error: Some(err), notes, ..base })
}

/// Ideal-cavity weight: 1/8 on the diagonal, k l / (k + l)^2 otherwise.
pub fn chi_weight(k: usize, l: usize) -> f64 {
    if k == l {
        0.125
    } else {
        let (k, l) = (k as f64, l as f64);
        k * l / ((k + l) * (k + l))
    }
}

/// Ideal cavity at zero temperature: weights (qdot/q)(qdot/q) chi_{kl} with Dirichlet phases.
pub fn delta_n_ideal_vacuum(k: usize, motion: &MotionLaw, t: f64, cutoff: usize, opts: &GeneralOptions) -> Result<KineticsResult> {
    if k == 0 || k > cutoff {
        return Err(CasimirError::IndexOutOfRange { branch: Branch::Cavity, k, cutoff });
    }
    let names = [DEGENERATE, PAIR_CC];
    let base = KineticsResult {
        k,
        p: p_of(motion),
        tau: tau_of(motion, t),
        t,
        delta_n: 0.0,
        channels: empty_channels(&names),
        method: KineticsMethod::IdealVacuum,
        tail_estimate: Some(0.0),
        quadrature_error: Some(0.0),
        notes: Vec::new(),
    };
    if motion.is_static() || t == 0.0 {
        return Ok(base);
    }
    let q0 = motion.q0();
    let w1 = PI / q0;
    let eval = |grid: &TimeGrid| -> Result<GridEval> {
        let qs: Vec<f64> = grid.nodes.iter().map(|s| motion.q(*s)).collect();
        let h: Vec<f64> = grid.nodes.iter().zip(&qs).map(|(s, q)| motion.qdot(*s) / q).collect();
        let base_phase: Vec<f64> = match opts.phase_order {
            PhaseOrder::ZerothInEpsilon => grid.nodes.iter().map(|s| w1 * s).collect(),
            PhaseOrder::ExactQuadrature => grid.cumulative(&qs.iter().map(|q| PI / q).collect::<Vec<_>>()),
        };
        let mut ch = empty_channels(&names);
        let mut per = Vec::with_capacity(cutoff);
        for l in 1..=cutoff {
            let phi: Vec<f64> = base_phase.iter().map(|p| (k + l) as f64 * p).collect();
            let v = 2.0 * chi_weight(k, l) * separable(grid, &h, &h, &phi).re;
            add(&mut ch, if l == k { DEGENERATE } else { PAIR_CC }, v);
            per.push(if l == k { 0.0 } else { v });
        }
        Ok(GridEval { channels: ch, per_mode_c: per, per_mode_r: Vec::new() })
    };
    let fastest = (k + cutoff) as f64 * w1 + motion.drive_rate();
    let (res, err) = converge(t, fastest, opts, eval)?;
    let delta_n = res.channels.values().sum();
    Ok(KineticsResult { delta_n, channels: res.channels, tail_estimate: Some(tail(&res.per_mode_c)), quadrature_error: Some(err), ..base })
}

/// Matching tolerances for the Kronecker deltas of the closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceOptions {
    /// Integer channels: |p - n| <= delta_res.
    pub delta_res: f64,
    /// Cavity–reservoir channels: |p - (k +- l kappa)| <= delta_cr.
    pub delta_cr: f64,
}

impl Default for ResonanceOptions {
    fn default() -> Self {
        ResonanceOptions { delta_res: 1e-9, delta_cr: 1e-6 }
    }
}

pub(crate) fn kron(p: f64, target: f64, tol: f64) -> f64 {
    if (p - target).abs() <= tol {
        1.0
    } else {
        0.0
    }
}

/// Step function with theta(0) = 0.
pub(crate) fn step(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Closed resonant photon number for sinusoidal motion at detuning `p` and time `tau`.
pub fn delta_n_resonant(
    k: usize,
    p: f64,
    tau: f64,
    state: &ModeState,
    couplings: &EffectiveCouplings,
    opts: &ResonanceOptions,
) -> Result<KineticsResult> {
    let (kc, kr) = (couplings.k_c(), couplings.k_r());
    if k == 0 || k > kc {
        return Err(CasimirError::IndexOutOfRange { branch: Branch::Cavity, k, cutoff: kc });
    }
    if state.selected != k {
        return Err(CasimirError::InvalidState(format!("state selects mode {} but mode {k} was requested", state.selected)));
    }
    if !(tau >= 0.0) {
        return Err(CasimirError::InvalidConfig(format!("tau must be >= 0, got {tau}")));
    }
    let kappa = couplings.kappa();
    let big_gamma = couplings.gamma_factor;
    let nk = state.selected_occupation();
    let kf = k as f64;
    let pre = (p * tau / 4.0).powi(2);
    let mut ch = empty_channels(&[DEGENERATE, PAIR_CC, SCATTER_CC, PAIR_CR, SCATTER_CR]);
    add(&mut ch, DEGENERATE, (p * big_gamma * tau / 4.0).powi(2) * (2.0 * nk + 1.0) * kron(p, 2.0 * kf, opts.delta_res));
    for l in (1..=kc).filter(|l| *l != k) {
        let lf = l as f64;
        let m2 = couplings.m_cc[(k - 1, l - 1)].powi(2);
        let nl = state.occupation(Branch::Cavity, l);
        let pair = (nk + nl + 1.0) * m2 * (kf - lf).powi(2) / (kf * lf) * kron(p, kf + lf, opts.delta_res);
        let scat = -(nk - nl) * m2 * (kf + lf).powi(2) / (kf * lf)
            * step(p)
            * (kron(p, kf - lf, opts.delta_res) + kron(p, lf - kf, opts.delta_res));
        add(&mut ch, PAIR_CC, pre * pair);
        add(&mut ch, SCATTER_CC, pre * scat);
    }
    for l in 1..=kr {
        let lk = l as f64 * kappa;
        let m2 = couplings.m_cr[(k - 1, l - 1)].powi(2);
        let w = kf / lk;
        let pair = -(state.occupation(Branch::Reservoir, k) + state.occupation(Branch::Cavity, l) + 1.0) * m2 * w * kron(p, kf + lk, opts.delta_cr);
        let scat = (nk - state.occupation(Branch::Reservoir, l)) * m2 * w * step(p) * (kron(p, kf - lk, opts.delta_cr) + kron(p, lk - kf, opts.delta_cr));
        add(&mut ch, PAIR_CR, pre * pair);
        add(&mut ch, SCATTER_CR, pre * scat);
    }
    let delta_n: f64 = ch.values().sum();
    let mut notes = Vec::new();
    if delta_n < 0.0 {
        let neg: Vec<&str> = ch.iter().filter(|(_, v)| **v < 0.0).map(|(n, _)| n.as_str()).collect();
        notes.push(format!("negative photon number driven by {}", neg.join(", ")));
    }
    Ok(KineticsResult {
        k,
        p: Some(p),
        tau: Some(tau),
        t: tau / (couplings.spectrum.omega1()),
        delta_n,
        channels: ch,
        method: KineticsMethod::ResonantClosedForm,
        tail_estimate: None,
        quadrature_error: None,
        notes,
    })
}

/// Total created photons and energy over the cavity cutoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub p: f64,
    pub tau: f64,
    pub n_total: f64,
    /// E_C / omega_1.
    pub energy: f64,
    pub per_mode: Vec<f64>,
}

/// N_C = sum_k Delta N_k and E_C/omega_1 = sum_k (omega_k/omega_1) Delta N_k.
pub fn totals(p: f64, tau: f64, state: &ModeState, couplings: &EffectiveCouplings, opts: &ResonanceOptions) -> Result<Totals> {
    let w1 = couplings.spectrum.omega1();
    let mut per_mode = Vec::with_capacity(couplings.k_c());
    let (mut n, mut e) = (0.0, 0.0);
    for k in 1..=couplings.k_c() {
        let s = state.retarget(k)?;
        let d = delta_n_resonant(k, p, tau, &s, couplings, opts)?.delta_n;
        per_mode.push(d);
        n += d;
        e += couplings.spectrum.omega_c[k - 1] / w1 * d;
    }
    Ok(Totals { p, tau, n_total: n, energy: e, per_mode })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bose_factor() {
        assert!((thermal_occupation(1.1_f64.ln(), 1.0) - 10.0).abs() < 1e-12);
        assert_eq!(thermal_occupation(3.0, 0.0), 0.0);
    }

    #[test]
    fn coincident_time_kernels() {
        for conv in [KernelConvention::AsPrinted, KernelConvention::OracleAdjudicated] {
            let f = conv.f(3.0, 0.0);
            let g = conv.g(3.0, 0.0);
            assert!((f - Complex64::new(-7.0, 0.0)).norm() < 1e-15);
            assert!((g - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn chi_table() {
        assert_eq!(chi_weight(3, 3), 0.125);
        assert!((chi_weight(1, 2) - 2.0 / 9.0).abs() < 1e-15);
    }
}
