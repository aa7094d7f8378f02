//! Brute-force check of the perturbative results: the interaction-picture
//! Hamiltonian on a truncated multimode Fock space, integrated exactly.
//!
//! Mixed states are kept as weighted ensembles of pure states, each evolved by
//! the Schrödinger equation; for a unitary generator this is the von Neumann
//! equation without ever forming the dimension-squared density matrix.

use std::f64::consts::PI;

use nalgebra::SymmetricEigen;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::Branch;
use crate::couplings::CouplingModel;
use crate::error::{CasimirError, Result};
use crate::fock::{CMatrix, CVector};
use crate::motion::MotionLaw;

pub const DEFAULT_DIMENSION_CAP: usize = 4096;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Product Fock space over a list of modes with per-mode cutoffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSystem {
    pub modes: Vec<(Branch, usize)>,
    pub cutoffs: Vec<usize>,
    pub dimension: usize,
    /// Index stride of each mode; the first mode is the slowest index.
    strides: Vec<usize>,
}

impl TruncatedSystem {
    /// Same cutoff `n_max` for every mode.
    pub fn new(modes: Vec<(Branch, usize)>, n_max: usize) -> Result<Self> {
        let cutoffs = vec![n_max; modes.len()];
        Self::with_cutoffs(modes, cutoffs, DEFAULT_DIMENSION_CAP)
    }

    pub fn with_cutoffs(modes: Vec<(Branch, usize)>, cutoffs: Vec<usize>, cap: usize) -> Result<Self> {
        if modes.is_empty() || modes.len() != cutoffs.len() {
            return Err(CasimirError::InvalidConfig("need one cutoff per mode and at least one mode".into()));
        }
        for (i, m) in modes.iter().enumerate() {
            if m.1 == 0 {
                return Err(CasimirError::IndexOutOfRange { branch: m.0, k: 0, cutoff: 0 });
            }
            if modes[..i].contains(m) {
                return Err(CasimirError::InvalidConfig(format!("mode {}{} listed twice", m.0, m.1)));
            }
        }
        let mut dimension: usize = 1;
        for n in &cutoffs {
            dimension = dimension.saturating_mul(n + 1);
        }
        if dimension > cap {
            return Err(CasimirError::DimensionCap { dimension, cap });
        }
        let mut strides = vec![1; modes.len()];
        for i in (0..modes.len().saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * (cutoffs[i + 1] + 1);
        }
        Ok(TruncatedSystem { modes, cutoffs, dimension, strides })
    }

    pub fn index_of(&self, mode: (Branch, usize)) -> Option<usize> {
        self.modes.iter().position(|m| *m == mode)
    }

    /// Occupation of mode `i` in basis state `idx`.
    pub fn occupation(&self, idx: usize, i: usize) -> usize {
        (idx / self.strides[i]) % (self.cutoffs[i] + 1)
    }

    /// Dense ladder operator of mode `i`.
    pub fn annihilation(&self, i: usize) -> CMatrix {
        let mut a = CMatrix::zeros(self.dimension, self.dimension);
        for idx in 0..self.dimension {
            let n = self.occupation(idx, i);
            if n > 0 {
                a[(idx - self.strides[i], idx)] = Complex64::new((n as f64).sqrt(), 0.0);
            }
        }
        a
    }

    pub fn creation(&self, i: usize) -> CMatrix {
        self.annihilation(i).adjoint()
    }

    /// Product basis vector from per-mode occupations.
    pub fn basis_index(&self, occupations: &[usize]) -> usize {
        occupations.iter().zip(&self.strides).map(|(n, s)| n * s).sum()
    }
}

/// One ladder factor: mode index and whether it raises.
type Ladder = (usize, bool);

/// c * L1 L2 with the two factors acting on different modes or both on one.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Term {
    coef: Complex64,
    ops: [Ladder; 2],
}

impl Term {
    fn adjoint(&self) -> Term {
        let [(i, ri), (j, rj)] = self.ops;
        Term { coef: self.coef.conj(), ops: [(j, !rj), (i, !ri)] }
    }
}

fn ladder(system: &TruncatedSystem, idx: usize, (i, raise): Ladder) -> Option<(usize, f64)> {
    let n = system.occupation(idx, i);
    if raise {
        (n < system.cutoffs[i]).then(|| (idx + system.strides[i], ((n + 1) as f64).sqrt()))
    } else {
        (n > 0).then(|| (idx - system.strides[i], (n as f64).sqrt()))
    }
}

/// out += sum_terms c * L1 L2 psi.
fn apply_terms(system: &TruncatedSystem, terms: &[Term], psi: &CVector, out: &mut CVector) {
    for (idx, amp) in psi.iter().enumerate() {
        if *amp == ZERO {
            continue;
        }
        for term in terms {
            // Rightmost factor acts first.
            let Some((j1, f1)) = ladder(system, idx, term.ops[1]) else { continue };
            let Some((j2, f2)) = ladder(system, j1, term.ops[0]) else { continue };
            out[j2] += term.coef * amp * (f1 * f2);
        }
    }
}

/// Time-dependent generator X(t) with H_I = i (X - X^dag).
fn generator_terms(system: &TruncatedSystem, model: &CouplingModel, motion: &MotionLaw, t: f64) -> Result<Vec<Term>> {
    let cfg = model.config();
    for (b, l) in &system.modes {
        let cutoff = cfg.cutoff(*b);
        if *l > cutoff {
            return Err(CasimirError::IndexOutOfRange { branch: *b, k: *l, cutoff });
        }
    }
    let (q, v) = (motion.q(t), motion.qdot(t));
    let phase = |b: Branch, l: usize| Complex64::from_polar(1.0, model.omega0(b, l) * t);
    let mut terms = Vec::new();
    for (i, &(b, k)) in system.modes.iter().enumerate() {
        if b != Branch::Cavity {
            continue;
        }
        let ek = phase(Branch::Cavity, k);
        let xi = model.xi(k, q, v);
        if xi != 0.0 {
            terms.push(Term { coef: ek * ek * xi, ops: [(i, true), (i, true)] });
        }
        for (j, &(bl, l)) in system.modes.iter().enumerate() {
            if j == i {
                continue;
            }
            if !model.has_pair(k, bl, l) {
                return Err(CasimirError::InvalidConfig(format!("coupling model lacks the pair ({k}, {bl}{l})")));
            }
            let mu = model.mu(k, bl, l, q, v);
            if mu == 0.0 {
                continue;
            }
            let el = phase(bl, l);
            terms.push(Term { coef: ek * el * mu, ops: [(i, true), (j, true)] });
            terms.push(Term { coef: ek * el.conj() * mu, ops: [(i, true), (j, false)] });
        }
    }
    Ok(terms)
}

fn full_generator(terms: Vec<Term>) -> Vec<Term> {
    // X - X^dag, so that psi' = -i H psi = (X - X^dag) psi.
    let adj: Vec<Term> = terms.iter().map(|t| Term { coef: -t.adjoint().coef, ..t.adjoint() }).collect();
    terms.into_iter().chain(adj).collect()
}

/// Dense interaction-picture Hamiltonian at time `t`.
pub fn build_hamiltonian(system: &TruncatedSystem, model: &CouplingModel, motion: &MotionLaw, t: f64) -> Result<CMatrix> {
    let gen = full_generator(generator_terms(system, model, motion, t)?);
    let d = system.dimension;
    let mut h = CMatrix::zeros(d, d);
    let mut e = CVector::zeros(d);
    let mut col = CVector::zeros(d);
    for j in 0..d {
        e[j] = Complex64::new(1.0, 0.0);
        col.fill(ZERO);
        apply_terms(system, &gen, &e, &mut col);
        // H = i (X - X^dag)
        h.set_column(j, &(&col * Complex64::i()));
        e[j] = ZERO;
    }
    Ok(h)
}

/// Weighted ensemble of pure states: rho = sum_i w_i |psi_i><psi_i|.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    pub weights: Vec<f64>,
    pub states: Vec<CVector>,
}

impl MixedState {
    pub fn pure(psi: CVector) -> Self {
        MixedState { weights: vec![1.0], states: vec![psi] }
    }

    /// Spectral decomposition of a density matrix; eigenvalues below `drop` are discarded.
    pub fn from_density(rho: &CMatrix, drop: f64) -> Self {
        let eig = SymmetricEigen::new(rho.clone());
        let mut weights = Vec::new();
        let mut states = Vec::new();
        for (i, w) in eig.eigenvalues.iter().enumerate() {
            if *w > drop {
                weights.push(*w);
                states.push(eig.eigenvectors.column(i).into_owned());
            }
        }
        MixedState { weights, states }
    }

    /// Product of single-mode density matrices, each padded or cut to the mode's cutoff.
    ///
    /// Returns the state and the largest single-mode trace lost to the cut.
    pub fn product(system: &TruncatedSystem, factors: &[CMatrix]) -> Result<(Self, f64)> {
        if factors.len() != system.modes.len() {
            return Err(CasimirError::InvalidState("need one single-mode state per mode".into()));
        }
        let mut lost = 0.0_f64;
        let mut ensemble: Vec<(f64, Vec<Complex64>)> = vec![(1.0, vec![Complex64::new(1.0, 0.0)])];
        for (rho, n) in factors.iter().zip(&system.cutoffs) {
            let d = n + 1;
            let keep = rho.nrows().min(d);
            let mut cut = CMatrix::zeros(d, d);
            cut.view_mut((0, 0), (keep, keep)).copy_from(&rho.view((0, 0), (keep, keep)));
            let tr = crate::fock::trace(&cut).re;
            lost = lost.max(1.0 - tr);
            if tr <= 0.0 {
                return Err(CasimirError::TruncationInsufficient { deficit: 1.0 });
            }
            cut /= Complex64::new(tr, 0.0);
            let local = MixedState::from_density(&cut, 1e-14);
            let mut next = Vec::with_capacity(ensemble.len() * local.weights.len());
            for (w, v) in &ensemble {
                for (lw, lv) in local.weights.iter().zip(&local.states) {
                    let mut out = Vec::with_capacity(v.len() * d);
                    for a in v {
                        for b in lv.iter() {
                            out.push(a * b);
                        }
                    }
                    next.push((w * lw, out));
                }
            }
            ensemble = next;
        }
        let weights = ensemble.iter().map(|e| e.0).collect();
        let states = ensemble.into_iter().map(|e| CVector::from_vec(e.1)).collect();
        Ok((MixedState { weights, states }, lost))
    }

    pub fn trace(&self) -> f64 {
        self.weights.iter().zip(&self.states).map(|(w, v)| w * v.norm_squared()).sum()
    }

    /// Tr rho^2.
    pub fn purity(&self) -> f64 {
        let mut s = 0.0;
        for (i, (wi, vi)) in self.weights.iter().zip(&self.states).enumerate() {
            for (wj, vj) in self.weights[i..].iter().zip(&self.states[i..]) {
                let o = vi.dotc(vj).norm_sqr() * wi * wj;
                s += if std::ptr::eq(vi, vj) { o } else { 2.0 * o };
            }
        }
        s
    }

    pub fn to_density(&self) -> CMatrix {
        let d = self.states.first().map_or(0, |v| v.len());
        let mut rho = CMatrix::zeros(d, d);
        for (w, v) in self.weights.iter().zip(&self.states) {
            rho += v * v.adjoint() * Complex64::new(*w, 0.0);
        }
        rho
    }
}

/// Reduced density matrix of mode `i`.
pub fn reduced_density(rho: &MixedState, system: &TruncatedSystem, i: usize) -> CMatrix {
    let d = system.cutoffs[i] + 1;
    let s = system.strides[i];
    let mut out = CMatrix::zeros(d, d);
    for (w, v) in rho.weights.iter().zip(&rho.states) {
        for idx in 0..system.dimension {
            if system.occupation(idx, i) != 0 {
                continue;
            }
            // idx enumerates the rest of the system with mode i empty.
            for n in 0..d {
                let a = v[idx + n * s];
                if a == ZERO {
                    continue;
                }
                for m in 0..d {
                    out[(n, m)] += a * v[idx + m * s].conj() * *w;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub mean_n: f64,
    /// 1 - Tr (reduced rho)^2 of the mode.
    pub entropy: f64,
}

pub fn observables(rho: &MixedState, system: &TruncatedSystem, i: usize) -> Observables {
    let r = reduced_density(rho, system, i);
    let mean_n = (0..r.nrows()).map(|n| n as f64 * r[(n, n)].re).sum();
    let entropy = 1.0 - crate::fock::trace(&(&r * &r)).re;
    Observables { mean_n, entropy }
}

/// Step-size and tolerance controls of the Dormand–Prince integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum step is the fastest generator period divided by this.
    pub steps_per_period: f64,
    pub min_step: f64,
    pub trace_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { rel_tol: 1e-10, abs_tol: 1e-12, steps_per_period: 40.0, min_step: 1e-13, trace_tol: 1e-6 }
    }
}

/// Fastest phase rate appearing in the generator.
fn fastest_rate(system: &TruncatedSystem, model: &CouplingModel, motion: &MotionLaw) -> f64 {
    let w: Vec<f64> = system.modes.iter().map(|(b, l)| model.omega0(*b, *l)).collect();
    let mut top = 0.0_f64;
    for (i, (b, _)) in system.modes.iter().enumerate() {
        if *b == Branch::Cavity {
            top = top.max(2.0 * w[i]);
            for wj in &w {
                top = top.max(w[i] + wj);
            }
        }
    }
    top + motion.drive_rate()
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<MixedState>,
    /// Tr rho - 1 at each output time.
    pub trace_drift: Vec<f64>,
    pub steps: usize,
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Rhs<'a> {
    system: &'a TruncatedSystem,
    model: &'a CouplingModel,
    motion: &'a MotionLaw,
}

impl Rhs<'_> {
    fn eval(&self, t: f64, ys: &[CVector]) -> Result<Vec<CVector>> {
        let gen = full_generator(generator_terms(self.system, self.model, self.motion, t)?);
        Ok(ys
            .iter()
            .map(|y| {
                let mut out = CVector::zeros(y.len());
                apply_terms(self.system, &gen, y, &mut out);
                out
            })
            .collect())
    }
}

/// Integrate the ensemble from `t_grid[0]` through every later grid time.
pub fn evolve(
    system: &TruncatedSystem,
    rho0: &MixedState,
    model: &CouplingModel,
    motion: &MotionLaw,
    t_grid: &[f64],
    opts: &OracleOptions,
) -> Result<Trajectory> {
    if t_grid.is_empty() || t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(CasimirError::InvalidConfig("time grid must be nonempty and nondecreasing".into()));
    }
    if rho0.states.iter().any(|v| v.len() != system.dimension) {
        return Err(CasimirError::InvalidState("state dimension does not match the truncated system".into()));
    }
    let tr0 = rho0.trace();
    if (tr0 - 1.0).abs() > 1e-10 || rho0.weights.iter().any(|w| *w < 0.0) {
        return Err(CasimirError::InvalidState(format!("initial ensemble has trace {tr0} or negative weights")));
    }
    let rhs = Rhs { system, model, motion };
    let h_max = 2.0 * PI / fastest_rate(system, model, motion).max(1e-12) / opts.steps_per_period;
    let mut y: Vec<CVector> = rho0.states.clone();
    let mut t = t_grid[0];
    let mut h = h_max;
    let mut steps = 0;
    let mut traj = Trajectory { times: Vec::new(), states: Vec::new(), trace_drift: Vec::new(), steps: 0 };
    let record = |t: f64, y: &[CVector], traj: &mut Trajectory| -> Result<()> {
        let st = MixedState { weights: rho0.weights.clone(), states: y.to_vec() };
        let drift = st.trace() - 1.0;
        if drift.abs() > opts.trace_tol {
            return Err(CasimirError::TraceDrift { drift });
        }
        traj.times.push(t);
        traj.states.push(st);
        traj.trace_drift.push(drift);
        Ok(())
    };
    record(t, &y, &mut traj)?;
    let mut k1 = rhs.eval(t, &y)?;
    for &target in &t_grid[1..] {
        while t < target {
            let last = target - t <= h;
            let step = if last { target - t } else { h };
            let mut ks: Vec<Vec<CVector>> = vec![k1.clone()];
            for s in 1..7 {
                let ys: Vec<CVector> = (0..y.len())
                    .map(|c| {
                        let mut v = y[c].clone();
                        for (j, kj) in ks.iter().enumerate() {
                            if A[s][j] != 0.0 {
                                v.axpy(Complex64::new(step * A[s][j], 0.0), &kj[c], Complex64::new(1.0, 0.0));
                            }
                        }
                        v
                    })
                    .collect();
                ks.push(rhs.eval(t + C[s] * step, &ys)?);
            }
            let mut err = 0.0_f64;
            let mut y_new = Vec::with_capacity(y.len());
            for c in 0..y.len() {
                let mut v5 = y[c].clone();
                let mut e = CVector::zeros(y[c].len());
                for s in 0..7 {
                    if B5[s] != 0.0 {
                        v5.axpy(Complex64::new(step * B5[s], 0.0), &ks[s][c], Complex64::new(1.0, 0.0));
                    }
                    e.axpy(Complex64::new(step * (B5[s] - B4[s]), 0.0), &ks[s][c], Complex64::new(1.0, 0.0));
                }
                for ((ei, yi), vi) in e.iter().zip(y[c].iter()).zip(v5.iter()) {
                    let scale = opts.abs_tol + opts.rel_tol * yi.norm().max(vi.norm());
                    err = err.max(ei.norm() / scale);
                }
                y_new.push(v5);
            }
            if err <= 1.0 {
                t = if last { target } else { t + step };
                y = y_new;
                // First-same-as-last: the seventh stage is the derivative at the new point.
                k1 = ks.pop().expect("seven stages");
                steps += 1;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h = (step * factor).min(h_max);
            if h < opts.min_step {
                return Err(CasimirError::StepUnderflow { t });
            }
        }
        record(t, &y, &mut traj)?;
    }
    traj.steps = steps;
    Ok(traj)
}

/// The `count` reservoir modes whose l * kappa lies closest to a cavity–reservoir
/// resonance of mode `k` at detuning `p`.
pub fn reservoir_band(model: &CouplingModel, k: usize, p: f64, count: usize) -> Vec<usize> {
    let kr = model.config().k_r;
    let kappa = model.kappa();
    let kf = k as f64;
    let targets = [p - kf, kf + p, kf - p];
    let mut scored: Vec<(f64, usize)> = (1..=kr)
        .map(|l| {
            let lk = l as f64 * kappa;
            let d = targets.iter().filter(|x| **x > 0.0).map(|x| (lk - x).abs()).fold(f64::INFINITY, f64::min);
            (d, l)
        })
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<usize> = scored.into_iter().take(count).map(|x| x.1).collect();
    out.sort_unstable();
    out
}

/// One row of a trajectory dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: f64,
    /// Mean occupation of every mode, in system order.
    pub occupations: Vec<f64>,
    /// Linear entropy of every mode, in system order.
    pub entropies: Vec<f64>,
    pub purity: f64,
    pub trace_drift: f64,
}

pub fn trajectory_rows(traj: &Trajectory, system: &TruncatedSystem) -> Vec<TrajectoryRow> {
    traj.times
        .iter()
        .zip(&traj.states)
        .zip(&traj.trace_drift)
        .map(|((t, st), drift)| {
            let obs: Vec<Observables> = (0..system.modes.len()).map(|i| observables(st, system, i)).collect();
            TrajectoryRow {
                t: *t,
                occupations: obs.iter().map(|o| o.mean_n).collect(),
                entropies: obs.iter().map(|o| o.entropy).collect(),
                purity: st.purity(),
                trace_drift: *drift,
            }
        })
        .collect()
}

/// A complete oracle run: cavity modes, optional reservoir band, initial states.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    pub cavity_modes: Vec<usize>,
    pub reservoir_modes: Vec<usize>,
    pub cavity_n_max: usize,
    pub reservoir_n_max: usize,
    /// Initial state of each cavity mode, in `cavity_modes` order; reservoir modes start in vacuum.
    pub cavity_states: Vec<CMatrix>,
    pub cap: usize,
}

impl OracleRun {
    pub fn system(&self, cavity_n_max: usize) -> Result<TruncatedSystem> {
        let mut modes: Vec<(Branch, usize)> = self.cavity_modes.iter().map(|k| (Branch::Cavity, *k)).collect();
        modes.extend(self.reservoir_modes.iter().map(|l| (Branch::Reservoir, *l)));
        let mut cutoffs = vec![cavity_n_max; self.cavity_modes.len()];
        cutoffs.extend(vec![self.reservoir_n_max; self.reservoir_modes.len()]);
        TruncatedSystem::with_cutoffs(modes, cutoffs, self.cap)
    }

    fn initial(&self, system: &TruncatedSystem) -> Result<(MixedState, f64)> {
        if self.cavity_states.len() != self.cavity_modes.len() {
            return Err(CasimirError::InvalidState("need one initial state per cavity mode".into()));
        }
        let mut factors = self.cavity_states.clone();
        let mut vac = CMatrix::zeros(1, 1);
        vac[(0, 0)] = Complex64::new(1.0, 0.0);
        factors.extend(std::iter::repeat_n(vac, self.reservoir_modes.len()));
        MixedState::product(system, &factors)
    }
}

/// Observables of one mode at the end of a run, with a cutoff-doubling check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub mode: (Branch, usize),
    pub t: f64,
    pub n_max: usize,
    pub initial: Observables,
    pub last: Observables,
    /// Same run at twice the cavity cutoff, when it fits under the cap.
    pub doubled: Option<Observables>,
    pub global_purity_drift: f64,
    pub max_trace_drift: f64,
    /// Trace of each single-mode initial state lost to the cutoff.
    pub truncation_loss: f64,
    /// Relative change of Delta N under cutoff doubling.
    pub delta_n_change: Option<f64>,
    /// Relative change of the entropy growth under cutoff doubling.
    pub entropy_change: Option<f64>,
    pub notes: Vec<String>,
}

impl OracleReport {
    pub fn delta_n(&self) -> f64 {
        self.last.mean_n - self.initial.mean_n
    }

    pub fn entropy_growth(&self) -> f64 {
        self.last.entropy - self.initial.entropy
    }

    /// Delta N is stable under cutoff doubling within `tol`.
    pub fn delta_n_converged(&self, tol: f64) -> bool {
        self.delta_n_change.is_some_and(|c| c <= tol)
    }

    pub fn entropy_converged(&self, tol: f64) -> bool {
        self.entropy_change.is_some_and(|c| c <= tol)
    }
}

fn run_once(run: &OracleRun, n_max: usize, model: &CouplingModel, motion: &MotionLaw, t: f64, opts: &OracleOptions) -> Result<(TruncatedSystem, Trajectory, f64)> {
    let system = run.system(n_max)?;
    let (rho0, lost) = run.initial(&system)?;
    let traj = evolve(&system, &rho0, model, motion, &[0.0, t], opts)?;
    Ok((system, traj, lost))
}

/// Evolve to `t`, read mode `mode` and repeat at doubled cavity cutoff.
pub fn run_with_check(
    run: &OracleRun,
    mode: (Branch, usize),
    model: &CouplingModel,
    motion: &MotionLaw,
    t: f64,
    opts: &OracleOptions,
) -> Result<OracleReport> {
    let (system, traj, lost) = run_once(run, run.cavity_n_max, model, motion, t, opts)?;
    let i = system.index_of(mode).ok_or(CasimirError::InvalidConfig(format!("mode {}{} not in the system", mode.0, mode.1)))?;
    let first = &traj.states[0];
    let end = traj.states.last().expect("two records");
    let initial = observables(first, &system, i);
    let last = observables(end, &system, i);
    let mut notes = Vec::new();
    let doubled = match run_once(run, 2 * run.cavity_n_max, model, motion, t, opts) {
        Ok((sys2, tr2, _)) => {
            let j = sys2.index_of(mode).expect("same modes");
            Some(observables(tr2.states.last().expect("two records"), &sys2, j))
        }
        Err(CasimirError::DimensionCap { dimension, cap }) => {
            notes.push(format!("doubled cutoff needs dimension {dimension} > cap {cap}; convergence unchecked"));
            None
        }
        Err(e) => return Err(e),
    };
    let (mut delta_n_change, mut entropy_change) = (None, None);
    if let Some(d) = &doubled {
        let sys2 = run.system(2 * run.cavity_n_max)?;
        let (r2, _) = run.initial(&sys2)?;
        let init2 = observables(&r2, &sys2, sys2.index_of(mode).expect("same modes"));
        let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
        delta_n_change = Some(rel(last.mean_n - initial.mean_n, d.mean_n - init2.mean_n));
        entropy_change = Some(rel(last.entropy - initial.entropy, d.entropy - init2.entropy));
    }
    Ok(OracleReport {
        mode,
        t,
        n_max: run.cavity_n_max,
        initial,
        last,
        doubled,
        global_purity_drift: end.purity() - first.purity(),
        max_trace_drift: traj.trace_drift.iter().fold(0.0_f64, |m, d| m.max(d.abs())),
        truncation_loss: lost,
        delta_n_change,
        entropy_change,
        notes,
    })
}
