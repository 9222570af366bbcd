//! Boundary conversions into the internal unit system.
//!
//! Internally every rate, detuning and frequency is an angular frequency in
//! rad/ps and every time is in ps. The helpers here accept the mix of units
//! used on the lab bench: ordinary frequency (GHz), photon energy (μeV),
//! wavelength offsets at a reference wavelength (nm) and cavity quality
//! factors.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Speed of light in nm/ps (exact SI value).
pub const SPEED_OF_LIGHT_NM_PER_PS: f64 = 299_792.458;
/// Planck constant in J·s (exact SI value).
pub const PLANCK_J_S: f64 = 6.626_070_15e-34;
/// Elementary charge in C (exact SI value).
pub const ELEMENTARY_CHARGE_C: f64 = 1.602_176_634e-19;
/// Default reference wavelength for nm and Q conversions.
pub const DEFAULT_REFERENCE_WAVELENGTH_NM: f64 = 920.0;

/// Reduced Planck constant in eV·ps, derived from the exact SI constants.
pub fn hbar_ev_ps() -> f64 {
    PLANCK_J_S / (2.0 * PI * ELEMENTARY_CHARGE_C) * 1e12
}

/// Ordinary frequency in GHz to angular frequency in rad/ps.
pub fn ghz_to_rad_per_ps(f_ghz: f64) -> f64 {
    2.0 * PI * f_ghz * 1e-3
}

pub fn rad_per_ps_to_ghz(w: f64) -> f64 {
    w / (2.0 * PI * 1e-3)
}

/// Energy in μeV to angular frequency E/ħ in rad/ps.
pub fn ue_v_to_rad_per_ps(e_uev: f64) -> f64 {
    e_uev * 1e-6 / hbar_ev_ps()
}

pub fn rad_per_ps_to_ue_v(w: f64) -> f64 {
    w * hbar_ev_ps() * 1e6
}

/// Angular frequency of light at `wavelength_nm`.
pub fn optical_angular_frequency(wavelength_nm: f64) -> f64 {
    2.0 * PI * SPEED_OF_LIGHT_NM_PER_PS / wavelength_nm
}

/// Angular-frequency offset produced by moving from `reference_nm` to
/// `reference_nm + offset_nm`. Exact (not linearized), so a red shift
/// (positive offset) gives a negative frequency offset.
pub fn wavelength_offset_to_rad_per_ps(offset_nm: f64, reference_nm: f64) -> f64 {
    let w_ref = optical_angular_frequency(reference_nm);
    optical_angular_frequency(reference_nm + offset_nm) - w_ref
}

/// Inverse of [`wavelength_offset_to_rad_per_ps`].
pub fn rad_per_ps_to_wavelength_offset(dw: f64, reference_nm: f64) -> f64 {
    let w_ref = optical_angular_frequency(reference_nm);
    2.0 * PI * SPEED_OF_LIGHT_NM_PER_PS / (w_ref + dw) - reference_nm
}

/// QD–cavity detuning `ω_c − ω_qd` from the wavelength difference
/// `λ_qd − λ_c` quoted at the reference (cavity) wavelength.
pub fn detuning_from_wavelength_difference(qd_minus_cavity_nm: f64, reference_nm: f64) -> f64 {
    // ω_c − ω_qd = −(ω(λ_c + δλ) − ω(λ_c))
    -wavelength_offset_to_rad_per_ps(qd_minus_cavity_nm, reference_nm)
}

/// Cavity energy decay rate ω/Q.
pub fn q_to_rad_per_ps(q: f64, reference_nm: f64) -> f64 {
    optical_angular_frequency(reference_nm) / q
}

pub fn rad_per_ps_to_q(kappa: f64, reference_nm: f64) -> f64 {
    optical_angular_frequency(reference_nm) / kappa
}

/// Converts a field (amplitude) decay rate into the energy decay rate used
/// by the master equation.
pub fn from_field_decay_rate(x: f64) -> f64 {
    2.0 * x
}

/// Units accepted by [`convert_units`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Unit {
    /// Angular frequency, rad/ps (internal canonical unit).
    RadPerPs,
    /// Ordinary frequency, GHz.
    GHz,
    /// Photon energy, μeV.
    MicroEv,
    /// Wavelength offset at the reference wavelength, nm.
    Nm,
    /// Cavity quality factor at the reference wavelength (maps to ω/Q).
    Q,
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "rad/ps" => Ok(Unit::RadPerPs),
            "GHz" | "ghz" => Ok(Unit::GHz),
            "ueV" | "μeV" | "µeV" | "uev" => Ok(Unit::MicroEv),
            "nm" => Ok(Unit::Nm),
            "Q" | "q" => Ok(Unit::Q),
            other => Err(Error::Units(format!("unknown unit `{other}`"))),
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Unit::RadPerPs => "rad/ps",
            Unit::GHz => "GHz",
            Unit::MicroEv => "ueV",
            Unit::Nm => "nm",
            Unit::Q => "Q",
        };
        f.write_str(s)
    }
}

fn to_canonical(value: f64, unit: Unit, reference_nm: f64) -> f64 {
    match unit {
        Unit::RadPerPs => value,
        Unit::GHz => ghz_to_rad_per_ps(value),
        Unit::MicroEv => ue_v_to_rad_per_ps(value),
        Unit::Nm => wavelength_offset_to_rad_per_ps(value, reference_nm),
        Unit::Q => q_to_rad_per_ps(value, reference_nm),
    }
}

fn from_canonical(value: f64, unit: Unit, reference_nm: f64) -> f64 {
    match unit {
        Unit::RadPerPs => value,
        Unit::GHz => rad_per_ps_to_ghz(value),
        Unit::MicroEv => rad_per_ps_to_ue_v(value),
        Unit::Nm => rad_per_ps_to_wavelength_offset(value, reference_nm),
        Unit::Q => rad_per_ps_to_q(value, reference_nm),
    }
}

/// Converts between any two supported units via rad/ps.
///
/// Conversions through `Q` only make sense for decay rates, and `Q` to `Q`
/// is the identity. Converting between `Q` and `nm` is rejected because one
/// is a linewidth and the other a frequency offset.
pub fn convert_units(value: f64, from: Unit, to: Unit, reference_nm: f64) -> Result<f64> {
    if !value.is_finite() {
        return Err(Error::Units(format!("non-finite value {value}")));
    }
    if !(reference_nm.is_finite() && reference_nm > 0.0) {
        return Err(Error::Units(format!(
            "reference wavelength must be positive, got {reference_nm}"
        )));
    }
    if from == to {
        return Ok(value);
    }
    let pair = (from, to);
    if matches!(pair, (Unit::Q, Unit::Nm) | (Unit::Nm, Unit::Q)) {
        return Err(Error::Units(format!("unsupported conversion {from} -> {to}")));
    }
    if (from == Unit::Q || to == Unit::Q) && value <= 0.0 {
        return Err(Error::Units("Q and decay rates must be positive".into()));
    }
    let canonical = to_canonical(value, from, reference_nm);
    Ok(from_canonical(canonical, to, reference_nm))
}
