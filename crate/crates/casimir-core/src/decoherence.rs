//! Linear entropy of a selected cavity mode and the decoherence time.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Branch;
use crate::couplings::{CouplingModel, EffectiveCouplings};
use crate::error::{CasimirError, Result};
use crate::fock::{self, CMatrix};
use crate::kinetics::{
    converge, fastest_rate, kron, phases, step, tail, Channels, GeneralOptions, GridEval, ModeState, ResonanceOptions,
    StateDescriptor, PAIR_CC, PAIR_CR, SCATTER_CC, SCATTER_CR,
};
use crate::motion::{MotionLaw, PhaseOrder};
use crate::quadrature::TimeGrid;

/// Terms driven by the anomalous moments <a^2>, <a^dag 2>.
pub const COHERENCE_CC: &str = "coherence_CC";
pub const COHERENCE_CR: &str = "coherence_CR";
/// Ideal-cavity piecewise formula, reported as a single channel.
pub const IDEAL_PIECEWISE: &str = "ideal_piecewise";

/// How the cat amplitude enters the moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum MomentMode {
    /// |alpha|^2 used literally as the occupation, coherent-state moments.
    #[default]
    Coherent,
    /// Moments of the normalized even cat in a truncated Fock basis.
    ExactCat,
}

/// Single-mode moments entering the entropy kernels.
///
/// `m1..m4` are the state functionals multiplying e^{iD}, e^{-iD},
/// e^{i(W+W')} and e^{-i(W+W')} in the entropy integrand:
/// m1 = Tr(a^dag a rho^2) - Tr(a rho a^dag rho), m2 = Tr(a a^dag rho^2) - Tr(a^dag rho a rho),
/// m3 = Tr(a^dag^2 rho^2) - Tr(a^dag rho a^dag rho), m4 = Tr(a^2 rho^2) - Tr(a rho a rho).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateMoments {
    pub mean_a: Complex64,
    pub mean_n: f64,
    pub mean_a2: Complex64,
    pub purity: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: Complex64,
    pub m4: Complex64,
}

/// Moments of an arbitrary density matrix.
pub fn moments_from_density(rho: &CMatrix) -> StateMoments {
    let n = rho.nrows() - 1;
    let a = fock::annihilation(n);
    let ad = a.adjoint();
    let rho2 = rho * rho;
    let tr = |m: CMatrix| fock::trace(&m);
    let m1 = tr(&ad * &a * &rho2) - tr(&a * rho * &ad * rho);
    let m2 = tr(&a * &ad * &rho2) - tr(&ad * rho * &a * rho);
    let m3 = tr(&ad * &ad * &rho2) - tr(&ad * rho * &ad * rho);
    let m4 = tr(&a * &a * &rho2) - tr(&a * rho * &a * rho);
    StateMoments {
        mean_a: tr(rho * &a),
        mean_n: tr(rho * &ad * &a).re,
        mean_a2: tr(rho * &a * &a),
        purity: tr(rho2).re,
        m1: m1.re,
        m2: m2.re,
        m3,
        m4,
    }
}

/// Moments of N(|alpha> + |-alpha>).
pub fn cat_moments(alpha: Complex64, mode: MomentMode) -> Result<StateMoments> {
    if !(alpha.re.is_finite() && alpha.im.is_finite()) {
        return Err(CasimirError::InvalidState("cat amplitude must be finite".into()));
    }
    match mode {
        MomentMode::Coherent => {
            let a2 = alpha.norm_sqr();
            let sq = alpha * alpha;
            Ok(StateMoments {
                mean_a: Complex64::new(0.0, 0.0),
                mean_n: a2,
                mean_a2: sq,
                purity: 1.0,
                m1: a2,
                m2: a2 + 1.0,
                m3: sq.conj(),
                m4: sq,
            })
        }
        MomentMode::ExactCat => {
            let n = fock::cat_cutoff(alpha, 1e-14)?;
            let (v, deficit) = fock::even_cat(alpha, n);
            if deficit > 1e-8 {
                return Err(CasimirError::TruncationInsufficient { deficit });
            }
            Ok(moments_from_density(&fock::projector(&v)))
        }
    }
}

/// Moments of any selected-mode descriptor; `mode` only affects cats.
pub fn descriptor_moments(descriptor: &StateDescriptor, mode: MomentMode) -> Result<StateMoments> {
    match descriptor {
        StateDescriptor::Cat { alpha } => cat_moments(*alpha, mode),
        StateDescriptor::Vacuum => cat_moments(Complex64::new(0.0, 0.0), MomentMode::Coherent),
        StateDescriptor::Thermal { mean } => {
            let purity = 1.0 / (2.0 * mean + 1.0);
            // p_n = (1 - r) r^n; Tr(a rho a^dag rho) = sum_n n p_n p_{n-1}.
            let r = mean / (mean + 1.0);
            let cross = r / (1.0 + r).powi(2);
            let zero = Complex64::new(0.0, 0.0);
            // sum n p_n^2
            let n_rho2 = (r / (1.0 + r)).powi(2);
            Ok(StateMoments {
                mean_a: zero,
                mean_n: *mean,
                mean_a2: zero,
                purity,
                m1: n_rho2 - cross,
                m2: n_rho2 + purity - cross,
                m3: zero,
                m4: zero,
            })
        }
        StateDescriptor::DensityMatrix(rho) => Ok(moments_from_density(rho)),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntropyMethod {
    GeneralIntegral,
    ResonantClosedForm,
    IdealPiecewise,
}

/// Linear entropy of the selected mode with its channel breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyResult {
    pub k: usize,
    pub p: Option<f64>,
    pub tau: Option<f64>,
    pub s: f64,
    /// 1 - Tr rho^2 of the initial state.
    pub s0: f64,
    pub channels: Channels,
    pub method: EntropyMethod,
    pub tail_estimate: Option<f64>,
    pub quadrature_error: Option<f64>,
    pub notes: Vec<String>,
}

impl EntropyResult {
    pub fn channel(&self, name: &str) -> f64 {
        self.channels.get(name).copied().unwrap_or(0.0)
    }
}

fn channels(names: &[&str]) -> Channels {
    names.iter().map(|n| (n.to_string(), 0.0)).collect()
}

fn add(ch: &mut Channels, name: &str, v: f64) {
    *ch.entry(name.to_string()).or_insert(0.0) += v;
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EntropyOptions {
    pub general: GeneralOptions,
    pub moments: MomentMode,
}

/// Integral of x(u) e^{i a(u)} y(s) e^{i b(s)} over 0 <= s <= u <= t.
fn separable2(grid: &TimeGrid, x: &[f64], a: &[f64], y: &[f64], b: &[f64]) -> Complex64 {
    let outer: Vec<Complex64> = x.iter().zip(a).map(|(v, p)| Complex64::from_polar(*v, *p)).collect();
    let inner: Vec<Complex64> = y.iter().zip(b).map(|(v, p)| Complex64::from_polar(*v, *p)).collect();
    grid.triangle(&outer, &inner)
}

fn neg(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| -x).collect()
}

fn comb(a: &[f64], b: &[f64], sa: f64, sb: f64) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| sa * x + sb * y).collect()
}

/// Second-order linear entropy of the selected mode for arbitrary motion.
///
/// Spectator modes are taken in vacuum; their occupations in `state` are ignored.
pub fn linear_entropy_general(
    state: &ModeState,
    model: &CouplingModel,
    motion: &MotionLaw,
    t: f64,
    opts: &EntropyOptions,
) -> Result<EntropyResult> {
    let k = state.selected;
    let cfg = *model.config();
    if k == 0 || k > cfg.k_c {
        return Err(CasimirError::IndexOutOfRange { branch: Branch::Cavity, k, cutoff: cfg.k_c });
    }
    if !(t >= 0.0) {
        return Err(CasimirError::InvalidConfig(format!("t must be >= 0, got {t}")));
    }
    let mom = descriptor_moments(&state.descriptor, opts.moments)?;
    let s0 = state.descriptor.linear_entropy()?;
    let names = [PAIR_CC, SCATTER_CC, COHERENCE_CC, PAIR_CR, SCATTER_CR, COHERENCE_CR];
    let tau = match motion {
        MotionLaw::Sinusoidal { epsilon, omega1, .. } => Some(epsilon * omega1 * t),
        _ => None,
    };
    let p = match motion {
        MotionLaw::Sinusoidal { p, .. } => Some(*p),
        _ => None,
    };
    let base = EntropyResult {
        k,
        p,
        tau,
        s: s0,
        s0,
        channels: channels(&names),
        method: EntropyMethod::GeneralIntegral,
        tail_estimate: Some(0.0),
        quadrature_error: Some(0.0),
        notes: Vec::new(),
    };
    if motion.is_static() || t == 0.0 {
        return Ok(base);
    }
    let go = &opts.general;
    let order: PhaseOrder = go.phase_order;
    let eval = |grid: &TimeGrid| -> Result<GridEval> {
        let qs: Vec<f64> = grid.nodes.iter().map(|s| motion.q(*s)).collect();
        let vs: Vec<f64> = grid.nodes.iter().map(|s| motion.qdot(*s)).collect();
        let wk = phases(grid, model, &qs, Branch::Cavity, k, order);
        let mut ch = channels(&names);
        let mut per_c = Vec::with_capacity(cfg.k_c);
        for l in (1..=cfg.k_c).filter(|l| *l != k) {
            let zlk: Vec<f64> = qs.iter().zip(&vs).map(|(q, v)| model.zeta(l, k, *q, *v)).collect();
            let zkl: Vec<f64> = qs.iter().zip(&vs).map(|(q, v)| model.zeta(k, l, *q, *v)).collect();
            // Xi+ - Upsilon+ = B B, Xi+ + Upsilon+ = A A, Xi- + Upsilon- = B A, Xi- - Upsilon- = A B.
            let a = comb(&zlk, &zkl, 1.0, 1.0);
            let b = comb(&zlk, &zkl, 1.0, -1.0);
            let wl = phases(grid, model, &qs, Branch::Cavity, l, order);
            let dif = comb(&wk, &wl, 1.0, -1.0);
            let sum = comb(&wk, &wl, 1.0, 1.0);
            let scat = 4.0 * mom.m1 * separable2(grid, &b, &dif, &b, &neg(&dif)).re;
            let pair = 4.0 * mom.m2 * separable2(grid, &a, &neg(&sum), &a, &sum).re;
            let coh = 4.0
                * (mom.m3 * separable2(grid, &b, &dif, &a, &sum) + mom.m4 * separable2(grid, &a, &neg(&sum), &b, &neg(&dif))).re;
            add(&mut ch, SCATTER_CC, scat);
            add(&mut ch, PAIR_CC, pair);
            add(&mut ch, COHERENCE_CC, coh);
            per_c.push(scat + pair + coh);
        }
        let mut per_r = Vec::new();
        if go.include_reservoir {
            for l in 1..=cfg.k_r {
                let m: Vec<f64> = qs.iter().zip(&vs).map(|(q, v)| model.mu(k, Branch::Reservoir, l, *q, *v)).collect();
                if m.iter().all(|v| *v == 0.0) {
                    per_r.push(0.0);
                    continue;
                }
                let wr = phases(grid, model, &qs, Branch::Reservoir, l, order);
                let dif = comb(&wk, &wr, 1.0, -1.0);
                let sum = comb(&wk, &wr, 1.0, 1.0);
                let scat = 4.0 * mom.m1 * separable2(grid, &m, &dif, &m, &neg(&dif)).re;
                let pair = 4.0 * mom.m2 * separable2(grid, &m, &neg(&sum), &m, &sum).re;
                let coh = -4.0
                    * (mom.m3 * separable2(grid, &m, &dif, &m, &sum) + mom.m4 * separable2(grid, &m, &neg(&sum), &m, &neg(&dif))).re;
                add(&mut ch, SCATTER_CR, scat);
                add(&mut ch, PAIR_CR, pair);
                add(&mut ch, COHERENCE_CR, coh);
                per_r.push(scat + pair + coh);
            }
        }
        Ok(GridEval { channels: ch, per_mode_c: per_c, per_mode_r: per_r })
    };
    let fastest = fastest_rate(model, motion, k, go.include_reservoir);
    let (res, err) = converge(t, fastest, go, eval)?;
    let growth: f64 = res.channels.values().sum();
    let tail_total = tail(&res.per_mode_c) + tail(&res.per_mode_r);
    let mut notes = Vec::new();
    if tail_total > go.tail_tolerance * growth.abs() {
        notes.push(format!("mode-sum truncation tail {tail_total:.3e} exceeds {:.1e} of the result", go.tail_tolerance));
    }
    if growth < 0.0 {
        notes.push("entropy below its initial value".into());
    }
    Ok(EntropyResult {
        s: s0 + growth,
        channels: res.channels,
        tail_estimate: Some(tail_total),
        quadrature_error: Some(err),
        notes,
        ..base
    })
}

/// Selected-mode state accepted by the closed entropy forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ResonantState {
    Vacuum,
    Cat { alpha: Complex64, moments: MomentMode },
}

impl ResonantState {
    /// The |alpha|^2 that multiplies the closed-form weights.
    pub fn alpha_sq(&self) -> f64 {
        match self {
            ResonantState::Vacuum => 0.0,
            ResonantState::Cat { alpha, moments: MomentMode::Coherent } => alpha.norm_sqr(),
            ResonantState::Cat { alpha, moments: MomentMode::ExactCat } => {
                let a2 = alpha.norm_sqr();
                a2 * a2.tanh()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ResonantEntropyOptions {
    pub resonance: ResonanceOptions,
    /// For an ideal cavity, k = 1, a cat and integer p, return the piecewise formula instead.
    pub ideal_fast_path: bool,
}

/// Ideal-cavity entropy of a cat in mode 1 at integer detuning `p >= 1`.
pub fn ideal_piecewise_entropy(p: u32, tau: f64, alpha_sq: f64) -> Result<f64> {
    let pf = p as f64;
    match p {
        0 => Err(CasimirError::NoResonance { p: 0.0 }),
        1 | 2 => Ok(0.5 * tau * tau * alpha_sq * (pf + 1.0)),
        _ => Ok(0.5 * tau * tau * (2.0 * alpha_sq * pf + pf - 1.0)),
    }
}

fn is_ideal(c: &EffectiveCouplings) -> bool {
    c.spectrum.eta_c.first().is_some_and(|e| *e == 0.0)
}

/// Closed resonant entropy for sinusoidal motion at detuning `p` and time `tau`.
pub fn linear_entropy_resonant(
    k: usize,
    p: f64,
    tau: f64,
    state: &ResonantState,
    couplings: &EffectiveCouplings,
    opts: &ResonantEntropyOptions,
) -> Result<EntropyResult> {
    let (kc, kr) = (couplings.k_c(), couplings.k_r());
    if k == 0 || k > kc {
        return Err(CasimirError::IndexOutOfRange { branch: Branch::Cavity, k, cutoff: kc });
    }
    if !(tau >= 0.0) {
        return Err(CasimirError::InvalidConfig(format!("tau must be >= 0, got {tau}")));
    }
    let base = EntropyResult {
        k,
        p: Some(p),
        tau: Some(tau),
        s: 0.0,
        s0: 0.0,
        channels: Channels::new(),
        method: EntropyMethod::ResonantClosedForm,
        tail_estimate: None,
        quadrature_error: None,
        notes: Vec::new(),
    };
    let a2 = state.alpha_sq();
    let tol = opts.resonance;
    if opts.ideal_fast_path && is_ideal(couplings) && k == 1 && p >= 1.0 && (p - p.round()).abs() <= tol.delta_res {
        if let ResonantState::Cat { .. } = state {
            let s = ideal_piecewise_entropy(p.round() as u32, tau, a2)?;
            let mut ch = Channels::new();
            add(&mut ch, IDEAL_PIECEWISE, s);
            return Ok(EntropyResult { s, channels: ch, method: EntropyMethod::IdealPiecewise, ..base });
        }
    }
    let kappa = couplings.kappa();
    let kf = k as f64;
    let (pre, pair_w, scat_w) = match state {
        ResonantState::Vacuum => ((p * tau / 2.0).powi(2), 1.0, 0.0),
        ResonantState::Cat { .. } => ((p * tau).powi(2), a2 + 1.0, a2),
    };
    let mut ch = channels(&[PAIR_CC, SCATTER_CC, PAIR_CR, SCATTER_CR]);
    for l in (1..=kc).filter(|l| *l != k) {
        let lf = l as f64;
        let m2 = couplings.m_cc[(k - 1, l - 1)].powi(2);
        let pair = pair_w * m2 * (kf - lf).powi(2) / (2.0 * kf * lf) * kron(p, kf + lf, tol.delta_res);
        let scat = scat_w * m2 * (kf + lf).powi(2) / (2.0 * kf * lf)
            * step(p)
            * (kron(p, kf - lf, tol.delta_res) + kron(p, lf - kf, tol.delta_res));
        add(&mut ch, PAIR_CC, pre * pair);
        add(&mut ch, SCATTER_CC, pre * scat);
    }
    for l in 1..=kr {
        let lk = l as f64 * kappa;
        let m2 = couplings.m_cr[(k - 1, l - 1)].powi(2);
        let w = kf / (2.0 * lk);
        let pair = -pair_w * m2 * w * kron(p, kf + lk, tol.delta_cr);
        let scat = -scat_w * m2 * w * step(p) * (kron(p, kf - lk, tol.delta_cr) + kron(p, lk - kf, tol.delta_cr));
        add(&mut ch, PAIR_CR, pre * pair);
        add(&mut ch, SCATTER_CR, pre * scat);
    }
    let s: f64 = ch.values().sum();
    let mut notes = Vec::new();
    if s < 0.0 {
        notes.push("negative entropy driven by cavity–reservoir channels".into());
    }
    Ok(EntropyResult { s, channels: ch, notes, ..base })
}

/// tau_D = 1 / sqrt(coefficient of tau^2 in the closed entropy).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoherenceTime {
    pub k: usize,
    pub tau_d: f64,
    pub p: f64,
    pub alpha_sq: f64,
    pub gamma: f64,
    pub coefficient: f64,
}

pub fn decoherence_time(
    k: usize,
    p: f64,
    alpha: Complex64,
    moments: MomentMode,
    couplings: &EffectiveCouplings,
    opts: &ResonantEntropyOptions,
) -> Result<DecoherenceTime> {
    let state = ResonantState::Cat { alpha, moments };
    let coefficient = linear_entropy_resonant(k, p, 1.0, &state, couplings, opts)?.s;
    if !(coefficient > 0.0) {
        return Err(CasimirError::NoResonance { p });
    }
    let eta1 = couplings.spectrum.eta_c.first().copied().unwrap_or(0.0);
    let gamma = if eta1 == 0.0 { f64::INFINITY } else { couplings.spectrum.omega1() / eta1 };
    Ok(DecoherenceTime { k, tau_d: 1.0 / coefficient.sqrt(), p, alpha_sq: state.alpha_sq(), gamma, coefficient })
}
