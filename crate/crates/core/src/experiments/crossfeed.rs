use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dot_resonance, local_fwhm, ExperimentConfig};
use crate::drive::{PulseKind, PulseShape};
use crate::dynamics::steady_state;
use crate::error::{invalid, Result};
use crate::hilbert::{SystemOperators, SystemParams};

/// Steady-state `(κ⟨a†a⟩, γ⟨σ†σ⟩)` for a cw laser.
fn fluxes(cfg: &ExperimentConfig, params: &SystemParams, drive: &PulseShape) -> Result<(f64, f64)> {
    cfg.escalate(params, |p| {
        let rho = steady_state(p, Some(drive))?;
        let ops = SystemOperators::new(p.n_max)?;
        Ok((p.kappa * rho.expect(&ops.number).re, p.gamma * rho.expect(&ops.excited).re))
    })
}

fn require_cw(cfg: &ExperimentConfig) -> Result<()> {
    if cfg.pulse.kind != PulseKind::Cw {
        return Err(invalid("pulse.kind", "needs a cw laser"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossFeeding {
    pub config: ExperimentConfig,
    /// Laser carrier detuning from the reference frequency, rad/ps.
    pub detuning: Vec<f64>,
    pub cavity_flux: Vec<f64>,
    pub dot_flux: Vec<f64>,
    /// Collection-weighted sum of both channels.
    pub collected: Vec<f64>,
    /// Laser detuning of the largest cavity flux.
    pub cavity_peak: f64,
    /// FWHM of the cavity-flux line at the dot resonance, rad/ps.
    pub dot_line_fwhm: Option<f64>,
}

/// Emission into each channel while a cw laser is tuned across both lines.
pub fn cross_feeding(cfg: &ExperimentConfig) -> Result<CrossFeeding> {
    cfg.validate()?;
    require_cw(cfg)?;
    let detuning = cfg.scan.values();
    let pairs = detuning
        .par_iter()
        .map(|&w| {
            let drive = PulseShape {
                carrier_detuning: w,
                ..cfg.pulse
            };
            fluxes(cfg, &cfg.params, &drive)
        })
        .collect::<Result<Vec<_>>>()?;
    let (cavity_flux, dot_flux): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let collected = cavity_flux
        .iter()
        .zip(&dot_flux)
        .map(|(c, d)| cfg.collection.cavity * c + cfg.collection.dot * d)
        .collect();
    let imax = cavity_flux
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    Ok(CrossFeeding {
        config: cfg.clone(),
        cavity_peak: detuning[imax],
        dot_line_fwhm: local_fwhm(&detuning, &cavity_flux, dot_resonance(&cfg.params)),
        detuning,
        cavity_flux,
        dot_flux,
        collected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSeries {
    pub config: ExperimentConfig,
    /// K
    pub temperature: Vec<f64>,
    pub delta: Vec<f64>,
    pub gamma_d: Vec<f64>,
    /// Cavity flux with the laser on the dot line.
    pub cavity_flux: Vec<f64>,
}

/// Cavity emission under resonant cw driving of the dot as temperature
/// tunes the dot and raises the dephasing `γ₀ + α₀T`.
pub fn temperature_series(cfg: &ExperimentConfig) -> Result<TemperatureSeries> {
    cfg.validate()?;
    require_cw(cfg)?;
    let tm = &cfg.temperature;
    if tm.points.is_empty() {
        return Err(invalid("temperature.points", "no temperatures given"));
    }
    let rows = tm
        .points
        .par_iter()
        .map(|pt| {
            let gamma_d = tm.gamma0 + tm.alpha0 * pt.temperature;
            let params = cfg.params.with_delta(pt.delta).with_gamma_d(gamma_d);
            let drive = PulseShape {
                carrier_detuning: dot_resonance(&params),
                ..cfg.pulse
            };
            Ok((gamma_d, fluxes(cfg, &params, &drive)?.0))
        })
        .collect::<Result<Vec<_>>>()?;
    let (gamma_d, cavity_flux) = rows.into_iter().unzip();
    Ok(TemperatureSeries {
        config: cfg.clone(),
        temperature: tm.points.iter().map(|p| p.temperature).collect(),
        delta: tm.points.iter().map(|p| p.delta).collect(),
        gamma_d,
        cavity_flux,
    })
}
