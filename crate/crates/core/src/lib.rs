//! Simulation of a coherently driven quantum dot strongly coupled to a
//! single photonic-cavity mode.
//!
//! Everything internal is in rad/ps and ps; see [`units`] for conversions.

pub mod analysis;
pub mod drive;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod generator;
pub mod hilbert;
pub mod mcwf;
pub mod ode;
pub mod spectra;
pub mod units;

pub use drive::{DriveTarget, PulseKind, PulseShape};
pub use error::{Error, Result};
pub use generator::{Channel, Generator};
pub use hilbert::{
    build_annihilation, build_hamiltonian, build_number, build_sigma, build_sigma_z, DensityMatrix, Operator,
    PureState, StateDiagnostics, SystemOperators, SystemParams, C64,
};
