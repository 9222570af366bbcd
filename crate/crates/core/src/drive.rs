//! Classical coherent drives.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Temporal envelope of the laser field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    Cw,
    Gaussian,
}

/// Which degree of freedom the laser couples to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriveTarget {
    /// `E(t)(a + a†)`
    Cavity,
    /// `E(t)(σ + σ†)`
    Dot,
    /// Weighted sum of both couplings, for a laser polarized between the
    /// cavity and dipole axes.
    Both { cavity: f64, dot: f64 },
}

impl DriveTarget {
    /// (cavity weight, dot weight)
    pub fn weights(&self) -> (f64, f64) {
        match *self {
            DriveTarget::Cavity => (1.0, 0.0),
            DriveTarget::Dot => (0.0, 1.0),
            DriveTarget::Both { cavity, dot } => (cavity, dot),
        }
    }
}

/// Classical drive `E(t)` with a carrier frequency offset from the reference
/// frequency (the mean of the QD and cavity frequencies).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseShape {
    pub kind: PulseKind,
    /// Peak field amplitude `E₀` in rad/ps. A magnitude; see `phase`.
    pub amplitude: f64,
    /// Pulse center in ps (ignored for cw).
    pub center: f64,
    /// Full width at half maximum of the field envelope `E(t)`, ps.
    pub fwhm: f64,
    /// Carrier frequency minus the reference frequency, rad/ps.
    pub carrier_detuning: f64,
    /// Drive phase in radians.
    #[serde(default)]
    pub phase: f64,
    pub target: DriveTarget,
}

impl PulseShape {
    pub fn cw(amplitude: f64, carrier_detuning: f64, target: DriveTarget) -> Self {
        PulseShape {
            kind: PulseKind::Cw,
            amplitude,
            center: 0.0,
            fwhm: 0.0,
            carrier_detuning,
            phase: 0.0,
            target,
        }
    }

    pub fn gaussian(
        amplitude: f64,
        center: f64,
        fwhm: f64,
        carrier_detuning: f64,
        target: DriveTarget,
    ) -> Self {
        PulseShape {
            kind: PulseKind::Gaussian,
            amplitude,
            center,
            fwhm,
            carrier_detuning,
            phase: 0.0,
            target,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(invalid(
                "pulse.amplitude",
                format!("must be a finite magnitude >= 0, got {}", self.amplitude),
            ));
        }
        if !self.carrier_detuning.is_finite() || !self.phase.is_finite() {
            return Err(invalid("pulse.carrier_detuning", "must be finite"));
        }
        if self.kind == PulseKind::Gaussian && !(self.fwhm.is_finite() && self.fwhm > 0.0) {
            return Err(invalid(
                "pulse.fwhm",
                format!("gaussian pulse needs fwhm > 0, got {}", self.fwhm),
            ));
        }
        if let DriveTarget::Both { cavity, dot } = self.target {
            if !(cavity.is_finite() && dot.is_finite()) {
                return Err(invalid("pulse.target", "coupling weights must be finite"));
            }
        }
        Ok(())
    }

    /// Standard deviation of the Gaussian field envelope.
    pub fn sigma(&self) -> f64 {
        self.fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
    }

    /// `E(t)`
    pub fn envelope(&self, t: f64) -> f64 {
        match self.kind {
            PulseKind::Cw => self.amplitude,
            PulseKind::Gaussian => {
                let s = self.sigma();
                let x = (t - self.center) / s;
                self.amplitude * (-0.5 * x * x).exp()
            }
        }
    }

    /// Time after which the envelope is below `1e-8` of its peak; `None`
    /// for cw drives.
    pub fn end_time(&self) -> Option<f64> {
        match self.kind {
            PulseKind::Cw => None,
            PulseKind::Gaussian => Some(self.center + 6.1 * self.sigma()),
        }
    }

    /// Largest integrator step that still resolves the envelope.
    pub fn max_step(&self) -> f64 {
        match self.kind {
            PulseKind::Cw => f64::INFINITY,
            PulseKind::Gaussian => self.sigma() / 4.0,
        }
    }

    pub fn with_amplitude(mut self, amplitude: f64) -> Self {
        self.amplitude = amplitude;
        self
    }
}
