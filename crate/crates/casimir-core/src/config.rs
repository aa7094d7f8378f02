use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CasimirError, Result};

/// Which pole family of the eigenfrequency condition a mode belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    Cavity,
    Reservoir,
}

impl Branch {
    pub fn tag(self) -> &'static str {
        match self {
            Branch::Cavity => "C",
            Branch::Reservoir => "R",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Default reservoir length in units of `q0`.
///
/// `k * L0` stays at least 0.021 away from an integer for every `k <= 40`,
/// so cavity and reservoir poles never collide. For `k <= 8` the reservoir
/// pole just below each cavity pole sits at least 0.162 pi / L0 away, more
/// than the first-order shift k pi / gamma whenever eta_k <= 1e-2: the
/// cavity roots never cross a reservoir pole in the perturbative regime.
pub const DEFAULT_L0: f64 = 30.2324;

/// Default mirror transmission parameter (inverse length).
pub const DEFAULT_GAMMA: f64 = 1.0e4;

/// Physical parameters of the cavity + reservoir system.
///
/// Units: c = hbar = k_B = 1. `gamma = f64::INFINITY` is the perfect mirror.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub q0: f64,
    pub l0: f64,
    pub gamma: f64,
    pub temperature: f64,
    pub k_c: usize,
    pub k_r: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        let mut cfg = SystemConfig {
            q0: 1.0,
            l0: DEFAULT_L0,
            gamma: DEFAULT_GAMMA,
            temperature: 0.0,
            k_c: 16,
            k_r: 0,
        };
        cfg.k_r = cfg.reservoir_cutoff_for(2.0);
        cfg
    }
}

impl SystemConfig {
    pub fn new(q0: f64, l0: f64, gamma: f64, temperature: f64, k_c: usize, k_r: usize) -> Result<Self> {
        let cfg = SystemConfig { q0, l0, gamma, temperature, k_c, k_r };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Perfect-mirror copy of this configuration.
    pub fn ideal(&self) -> Self {
        SystemConfig { gamma: f64::INFINITY, ..*self }
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        SystemConfig { gamma, ..*self }
    }

    pub fn with_temperature(&self, temperature: f64) -> Self {
        SystemConfig { temperature, ..*self }
    }

    pub fn is_ideal(&self) -> bool {
        self.gamma.is_infinite()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CasimirError::InvalidConfig(m));
        if !(self.q0 > 0.0 && self.q0.is_finite()) {
            return bad(format!("q0 must be positive and finite, got {}", self.q0));
        }
        if !(self.l0 > 0.0 && self.l0.is_finite()) {
            return bad(format!("L0 must be positive and finite, got {}", self.l0));
        }
        if !(self.gamma > 0.0) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return bad(format!("temperature must be >= 0, got {}", self.temperature));
        }
        if self.k_c < 1 {
            return bad("K_C must be at least 1".into());
        }
        let ratio = self.l0 / self.q0;
        if (ratio - ratio.round()).abs() < 1e-9 {
            return bad(format!("L0/q0 = {ratio} must not be an integer"));
        }
        Ok(())
    }

    /// Non-fatal diagnostics, e.g. a mirror too leaky for first-order frequencies.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let eta1 = self.eta1();
        if eta1 >= 0.1 {
            out.push(format!("eta_1 = {eta1:.4} >= 0.1: perturbative branches are not trustworthy"));
        }
        out
    }

    /// Static fundamental cavity frequency at first order in 1/gamma.
    pub fn omega1(&self) -> f64 {
        PI / (self.q0 + self.inv_gamma())
    }

    /// eta_1 = omega_1 / gamma.
    pub fn eta1(&self) -> f64 {
        self.omega1() * self.inv_gamma()
    }

    pub fn inv_gamma(&self) -> f64 {
        if self.is_ideal() {
            0.0
        } else {
            1.0 / self.gamma
        }
    }

    /// Reservoir cutoff covering frequencies up to `(p + 1) * omega_1`.
    pub fn reservoir_cutoff_for(&self, p: f64) -> usize {
        ((p.max(0.0) + 1.0) * self.l0 / self.q0).ceil() as usize
    }

    /// Cavity cutoff `max(2p + 4, 16)`.
    pub fn cavity_cutoff_for(p: f64) -> usize {
        ((2.0 * p.max(0.0) + 4.0).ceil() as usize).max(16)
    }

    /// Copy with both cutoffs sized for detuning `p`.
    pub fn with_cutoffs_for(&self, p: f64) -> Self {
        SystemConfig {
            k_c: Self::cavity_cutoff_for(p),
            k_r: self.reservoir_cutoff_for(p),
            ..*self
        }
    }

    pub fn cutoff(&self, branch: Branch) -> usize {
        match branch {
            Branch::Cavity => self.k_c,
            Branch::Reservoir => self.k_r,
        }
    }
}
