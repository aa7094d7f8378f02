//! Photon creation and decoherence in a leaky cavity with an oscillating mirror.
//!
//! The cavity `[0, q(t)]` is coupled to a reservoir `[-L0, 0]` through a
//! delta-function mirror of strength `gamma`. Second-order perturbation theory
//! in the mirror velocity gives photon numbers and linear entropies; the
//! closed resonant forms are cross-checked against double-time integrals and a
//! truncated Fock-space integrator.

pub mod config;
pub mod couplings;
pub mod decoherence;
pub mod motion;
pub mod oracle;
pub mod error;
pub mod fock;
pub mod kinetics;
pub mod quadrature;
pub mod roots;
pub mod spectrum;

pub use config::{Branch, SystemConfig};
pub use couplings::{CouplingModel, CouplingTable, EffectiveCouplings, PairSelection, QDependence};
pub use motion::{make_motion, FrequencyProvider, MotionKind, MotionLaw, PhaseOrder};
pub use decoherence::{EntropyResult, MomentMode, ResonantState};
pub use error::{CasimirError, Result};
pub use kinetics::{KernelConvention, KineticsMethod, KineticsResult, ModeState, StateDescriptor};
pub use spectrum::{BranchMethod, Eigenmode, ModeFunction, ModeSpectrum, OverlapMethod, SpectrumSolver};
