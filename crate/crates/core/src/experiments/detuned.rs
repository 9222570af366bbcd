use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dot_resonance, integrate, resample, ExperimentConfig, InitialState};
use crate::analysis::{fit_exponential_tail, gaussian_blur, TailFit};
use crate::drive::{DriveTarget, PulseKind, PulseShape};
use crate::error::{invalid, Error, Result};
use crate::hilbert::{StateDiagnostics, SystemParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetunedDrive {
    pub config: ExperimentConfig,
    /// Pulse actually applied (dot target, on the dot line).
    pub pulse: PulseShape,
    pub times: Vec<f64>,
    /// `κ⟨a†a⟩` after the instrument response.
    pub cavity_flux: Vec<f64>,
    /// `γ⟨σ†σ⟩`
    pub dot_flux: Vec<f64>,
    pub cavity_yield: f64,
    pub dot_yield: f64,
    /// Cavity yield over dot yield.
    pub yield_ratio: f64,
    /// Tail fit of the cavity emission after the pulse.
    pub fit: TailFit,
    pub worst: StateDiagnostics,
}

fn dot_pulse(cfg: &ExperimentConfig, params: &SystemParams) -> Result<PulseShape> {
    if cfg.pulse.kind != PulseKind::Gaussian {
        return Err(invalid("pulse.kind", "detuned drive needs a gaussian pulse"));
    }
    Ok(PulseShape {
        carrier_detuning: dot_resonance(params),
        target: DriveTarget::Dot,
        ..cfg.pulse
    })
}

fn run(cfg: &ExperimentConfig, params: &SystemParams) -> Result<DetunedDrive> {
    if params.delta == 0.0 {
        return Err(invalid("params.delta", "detuned drive needs a nonzero QD-cavity detuning"));
    }
    let pulse = dot_pulse(cfg, params)?;
    let ev = super::master_run(cfg, params, Some(&pulse), InitialState::Ground)?;
    let cavity: Vec<f64> = ev.photon_number.iter().map(|n| params.kappa * n).collect();
    let dot: Vec<f64> = ev.excited.iter().map(|e| params.gamma * e).collect();
    let blurred = gaussian_blur(&ev.times, &cavity, cfg.detector.irf_fwhm)?;
    let cavity_yield = integrate(&ev.times, &cavity);
    let dot_yield = integrate(&ev.times, &dot);
    let (times, cavity_flux) = resample(&ev.times, &blurred, cfg.detector.bin);
    let (_, dot_flux) = resample(&ev.times, &dot, cfg.detector.bin);
    let fit = fit_exponential_tail(&times, &cavity_flux, pulse.center + 1.5 * pulse.fwhm)?;
    Ok(DetunedDrive {
        config: cfg.clone(),
        pulse,
        times,
        cavity_flux,
        dot_flux,
        cavity_yield,
        dot_yield,
        yield_ratio: if dot_yield > 0.0 { cavity_yield / dot_yield } else { f64::INFINITY },
        fit,
        worst: ev.worst,
    })
}

/// Pulse resonant with the detuned dot; the cavity emission is fed only
/// through the dot.
pub fn detuned_drive(cfg: &ExperimentConfig) -> Result<DetunedDrive> {
    cfg.validate()?;
    run(cfg, &cfg.params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaDFit {
    pub config: ExperimentConfig,
    pub target: f64,
    pub gamma_d: f64,
    pub lifetime: f64,
    /// Every `(γ_d, lifetime)` evaluated, in order.
    pub evaluations: Vec<(f64, f64)>,
}

fn lifetime_at(cfg: &ExperimentConfig, gamma_d: f64) -> Result<f64> {
    Ok(run(cfg, &cfg.params.with_gamma_d(gamma_d))?.fit.lifetime)
}

/// Bisection on `γ_d` for the configured target lifetime.
pub fn fit_gamma_d(cfg: &ExperimentConfig) -> Result<GammaDFit> {
    cfg.validate()?;
    let l = &cfg.lifetime;
    let target = l.target.ok_or_else(|| invalid("lifetime.target", "missing"))?;
    let (mut lo, mut hi) = (l.gamma_d_min, l.gamma_d_max);
    let (f_lo, f_hi) = (lifetime_at(cfg, lo)?, lifetime_at(cfg, hi)?);
    let mut evaluations = vec![(lo, f_lo), (hi, f_hi)];
    if (f_lo - target) * (f_hi - target) > 0.0 {
        return Err(Error::Analysis(format!(
            "target {target} ps is not bracketed: {f_lo:.2} ps at {lo}, {f_hi:.2} ps at {hi}"
        )));
    }
    let decreasing = f_hi < f_lo;
    while hi - lo > l.tolerance {
        let mid = 0.5 * (lo + hi);
        let f = lifetime_at(cfg, mid)?;
        evaluations.push((mid, f));
        if (f > target) == decreasing {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gamma_d = 0.5 * (lo + hi);
    let lifetime = lifetime_at(cfg, gamma_d)?;
    evaluations.push((gamma_d, lifetime));
    Ok(GammaDFit {
        config: cfg.clone(),
        target,
        gamma_d,
        lifetime,
        evaluations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifetimeSweep {
    pub config: ExperimentConfig,
    pub gamma_d: Vec<f64>,
    pub lifetime: Vec<f64>,
}

/// Cavity-emission lifetime for each `γ_d`.
pub fn lifetime_sweep(cfg: &ExperimentConfig, gamma_d: &[f64]) -> Result<LifetimeSweep> {
    cfg.validate()?;
    let lifetime = gamma_d
        .par_iter()
        .map(|&gd| lifetime_at(cfg, gd))
        .collect::<Result<Vec<_>>>()?;
    Ok(LifetimeSweep {
        config: cfg.clone(),
        gamma_d: gamma_d.to_vec(),
        lifetime,
    })
}
