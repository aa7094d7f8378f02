//! Mirror trajectories and accumulated mode phases.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::config::Branch;
use crate::error::{CasimirError, Result};
use crate::quadrature::{integrate_with, QuadOptions};
use crate::spectrum::SpectrumSolver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MotionKind {
    Static,
    Sinusoidal,
}

/// Mirror position q(t) and velocity.
#[derive(Debug, Clone, PartialEq)]
pub enum MotionLaw {
    Static { q0: f64 },
    /// q(t) = q0 [1 + epsilon sin(p omega1 t)]
    Sinusoidal { q0: f64, epsilon: f64, p: f64, omega1: f64 },
    Tabulated(TabulatedMotion),
}

/// Build a static or sinusoidal trajectory.
pub fn make_motion(kind: MotionKind, q0: f64, epsilon: f64, p: f64, omega1: f64) -> Result<MotionLaw> {
    if !(q0 > 0.0) {
        return Err(CasimirError::InvalidMotion(format!("q0 must be positive, got {q0}")));
    }
    match kind {
        MotionKind::Static => Ok(MotionLaw::Static { q0 }),
        MotionKind::Sinusoidal => {
            if !(0.0..1.0).contains(&epsilon) {
                return Err(CasimirError::InvalidMotion(format!(
                    "epsilon = {epsilon} must lie in [0, 1); the mirror would reach x = 0"
                )));
            }
            if !(p >= 0.0 && p.is_finite()) {
                return Err(CasimirError::InvalidMotion(format!("p must be finite and >= 0, got {p}")));
            }
            if !(omega1 > 0.0) {
                return Err(CasimirError::InvalidMotion(format!("omega1 must be positive, got {omega1}")));
            }
            Ok(MotionLaw::Sinusoidal { q0, epsilon, p, omega1 })
        }
    }
}

impl MotionLaw {
    pub fn sinusoidal(q0: f64, epsilon: f64, p: f64, omega1: f64) -> Result<Self> {
        make_motion(MotionKind::Sinusoidal, q0, epsilon, p, omega1)
    }

    pub fn tabulated(samples: &[(f64, f64, f64)]) -> Result<Self> {
        Ok(MotionLaw::Tabulated(TabulatedMotion::new(samples)?))
    }

    pub fn q(&self, t: f64) -> f64 {
        match self {
            MotionLaw::Static { q0 } => *q0,
            MotionLaw::Sinusoidal { q0, epsilon, p, omega1 } => q0 * (1.0 + epsilon * (p * omega1 * t).sin()),
            MotionLaw::Tabulated(tab) => tab.q(t),
        }
    }

    pub fn qdot(&self, t: f64) -> f64 {
        match self {
            MotionLaw::Static { .. } => 0.0,
            MotionLaw::Sinusoidal { q0, epsilon, p, omega1 } => q0 * epsilon * p * omega1 * (p * omega1 * t).cos(),
            MotionLaw::Tabulated(tab) => tab.qdot(t),
        }
    }

    /// Position at t = 0.
    pub fn q0(&self) -> f64 {
        self.q(0.0)
    }

    pub fn is_static(&self) -> bool {
        match self {
            MotionLaw::Static { .. } => true,
            MotionLaw::Sinusoidal { epsilon, p, .. } => *epsilon == 0.0 || *p == 0.0,
            MotionLaw::Tabulated(tab) => tab.slopes.iter().all(|s| *s == 0.0),
        }
    }

    /// Mirror oscillation period, when there is one.
    pub fn period(&self) -> Option<f64> {
        match self {
            MotionLaw::Sinusoidal { p, omega1, .. } if *p > 0.0 => Some(2.0 * PI / (p * omega1)),
            _ => None,
        }
    }

    /// Fastest angular rate present in q(t); used to size quadrature panels.
    pub fn drive_rate(&self) -> f64 {
        match self {
            MotionLaw::Static { .. } => 0.0,
            MotionLaw::Sinusoidal { p, omega1, .. } => p * omega1,
            MotionLaw::Tabulated(tab) => tab.max_rate(),
        }
    }

    /// Bounds of q(t) over [0, t_max].
    pub fn q_range(&self, t_max: f64) -> (f64, f64) {
        match self {
            MotionLaw::Static { q0 } => (*q0, *q0),
            MotionLaw::Sinusoidal { q0, epsilon, .. } => {
                if self.is_static() {
                    (*q0, *q0)
                } else {
                    (q0 * (1.0 - epsilon), q0 * (1.0 + epsilon))
                }
            }
            MotionLaw::Tabulated(tab) => tab.range(t_max),
        }
    }

    /// True when the law is defined on [0, t] without extrapolation.
    pub fn covers(&self, t: f64) -> bool {
        match self {
            MotionLaw::Tabulated(tab) => tab.t[0] <= 0.0 && *tab.t.last().unwrap() >= t,
            _ => true,
        }
    }
}

/// Monotone cubic (Fritsch–Carlson) interpolation of sampled q(t).
///
/// q̇ is the analytic derivative of the interpolant; the sampled velocity
/// column is kept for reference only.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedMotion {
    pub t: Vec<f64>,
    pub q: Vec<f64>,
    pub qdot_samples: Vec<f64>,
    slopes: Vec<f64>,
}

impl TabulatedMotion {
    pub fn new(samples: &[(f64, f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(CasimirError::InvalidMotion("a trajectory table needs at least two rows".into()));
        }
        let t: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let q: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let qdot_samples: Vec<f64> = samples.iter().map(|s| s.2).collect();
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(CasimirError::InvalidMotion("trajectory times must be strictly increasing".into()));
        }
        if q.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(CasimirError::InvalidMotion("trajectory q must be positive and finite".into()));
        }
        if qdot_samples.iter().any(|v| !v.is_finite()) {
            return Err(CasimirError::InvalidMotion("trajectory qdot must be finite".into()));
        }
        let n = t.len();
        let delta: Vec<f64> = (0..n - 1).map(|i| (q[i + 1] - q[i]) / (t[i + 1] - t[i])).collect();
        let mut m = vec![0.0; n];
        m[0] = delta[0];
        m[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            m[i] = if delta[i - 1] * delta[i] <= 0.0 { 0.0 } else { 0.5 * (delta[i - 1] + delta[i]) };
        }
        for i in 0..n - 1 {
            if delta[i] == 0.0 {
                m[i] = 0.0;
                m[i + 1] = 0.0;
                continue;
            }
            let a = m[i] / delta[i];
            let b = m[i + 1] / delta[i];
            let s = a * a + b * b;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                m[i] = tau * a * delta[i];
                m[i + 1] = tau * b * delta[i];
            }
        }
        Ok(TabulatedMotion { t, q, qdot_samples, slopes: m })
    }

    fn locate(&self, t: f64) -> Option<usize> {
        let n = self.t.len();
        if t <= self.t[0] || t >= self.t[n - 1] {
            return None;
        }
        Some(self.t.partition_point(|x| *x <= t) - 1)
    }

    pub fn q(&self, t: f64) -> f64 {
        match self.locate(t) {
            None if t <= self.t[0] => self.q[0],
            None => *self.q.last().unwrap(),
            Some(i) => {
                let h = self.t[i + 1] - self.t[i];
                let s = (t - self.t[i]) / h;
                let (h00, h10, h01, h11) = (
                    (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
                    s * (1.0 - s) * (1.0 - s),
                    s * s * (3.0 - 2.0 * s),
                    s * s * (s - 1.0),
                );
                h00 * self.q[i] + h10 * h * self.slopes[i] + h01 * self.q[i + 1] + h11 * h * self.slopes[i + 1]
            }
        }
    }

    pub fn qdot(&self, t: f64) -> f64 {
        match self.locate(t) {
            None => {
                if t == self.t[0] {
                    self.slopes[0]
                } else if t == *self.t.last().unwrap() {
                    *self.slopes.last().unwrap()
                } else {
                    0.0
                }
            }
            Some(i) => {
                let h = self.t[i + 1] - self.t[i];
                let s = (t - self.t[i]) / h;
                let d00 = 6.0 * s * (s - 1.0) / h;
                let d10 = (1.0 - s) * (1.0 - 3.0 * s);
                let d01 = -d00;
                let d11 = s * (3.0 * s - 2.0);
                d00 * self.q[i] + d10 * self.slopes[i] + d01 * self.q[i + 1] + d11 * self.slopes[i + 1]
            }
        }
    }

    fn range(&self, t_max: f64) -> (f64, f64) {
        let mut lo = self.q(0.0);
        let mut hi = lo;
        for (ti, qi) in self.t.iter().zip(&self.q) {
            if *ti >= 0.0 && *ti <= t_max {
                lo = lo.min(*qi);
                hi = hi.max(*qi);
            }
        }
        let qe = self.q(t_max);
        (lo.min(qe), hi.max(qe))
    }

    fn max_rate(&self) -> f64 {
        let min_dt = self.t.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        PI / min_dt
    }
}

/// Anything that can report an instantaneous eigenfrequency.
pub trait FrequencyProvider {
    fn frequency(&self, branch: Branch, k: usize, q: f64) -> Result<f64>;
}

impl FrequencyProvider for SpectrumSolver {
    fn frequency(&self, branch: Branch, k: usize, q: f64) -> Result<f64> {
        self.omega(branch, k, q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PhaseOrder {
    /// Omega_k(t) = omega_k(q0) t.
    #[default]
    ZerothInEpsilon,
    /// Omega_k(t) = int_0^t omega_k(q(s)) ds.
    ExactQuadrature,
}

/// Phase Omega_k(t) of mode k.
///
/// Reservoir frequencies do not depend on the mirror position at first order
/// in 1/gamma, so reservoir phases are always linear in t.
pub fn phase(
    motion: &MotionLaw,
    provider: &dyn FrequencyProvider,
    branch: Branch,
    k: usize,
    t: f64,
    order: PhaseOrder,
) -> Result<f64> {
    let w0 = provider.frequency(branch, k, motion.q0())?;
    if order == PhaseOrder::ZerothInEpsilon || branch == Branch::Reservoir || motion.is_static() {
        return Ok(w0 * t);
    }
    let rate = motion.drive_rate().max(w0);
    let opts = QuadOptions { rel_tol: 1e-8, abs_tol: 1e-14, max_panel: PI / rate, max_intervals: 100_000 };
    let r = integrate_with(|s| provider.frequency(branch, k, motion.q(s)), 0.0, t, &opts)?;
    Ok(r.value)
}

/// Accumulated phase for one mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseAccumulator {
    pub branch: Branch,
    pub k: usize,
    pub order: PhaseOrder,
}

impl PhaseAccumulator {
    pub fn phase(&self, motion: &MotionLaw, provider: &dyn FrequencyProvider, t: f64) -> Result<f64> {
        phase(motion, provider, self.branch, self.k, t, self.order)
    }

    /// Delta(t, s) = Omega(t) - Omega(s).
    pub fn delta(&self, motion: &MotionLaw, provider: &dyn FrequencyProvider, t: f64, s: f64) -> Result<f64> {
        Ok(self.phase(motion, provider, t)? - self.phase(motion, provider, s)?)
    }
}
