use serde::{Deserialize, Serialize};

use super::{resample, ExperimentConfig, InitialState};
use crate::analysis::{exponential_delay_average, fit_exponential_tail, gaussian_blur, one_over_e_time, TailFit};
use crate::error::Result;
use crate::hilbert::StateDiagnostics;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlDecay {
    pub config: ExperimentConfig,
    /// Detector bins, ps.
    pub times: Vec<f64>,
    /// `κ⟨a†a⟩` before jitter and instrument response, photons/ps.
    pub cavity_flux: Vec<f64>,
    /// `γ⟨σ†σ⟩`
    pub dot_flux: Vec<f64>,
    /// Collected, jittered and blurred signal.
    pub signal: Vec<f64>,
    pub fit: TailFit,
    /// Time from the maximum to 1/e of it, ps.
    pub one_over_e: f64,
    pub worst: StateDiagnostics,
}

/// Spontaneous emission after the dot is prepared in `|e⟩` with no photon
/// in the cavity.
pub fn pl_decay(cfg: &ExperimentConfig) -> Result<PlDecay> {
    cfg.validate()?;
    let ev = super::master_run(cfg, &cfg.params, None, InitialState::Excited)?;
    let p = &cfg.params;
    let cavity: Vec<f64> = ev.photon_number.iter().map(|n| p.kappa * n).collect();
    let dot: Vec<f64> = ev.excited.iter().map(|e| p.gamma * e).collect();
    let collected: Vec<f64> = cavity
        .iter()
        .zip(&dot)
        .map(|(c, d)| cfg.collection.cavity * c + cfg.collection.dot * d)
        .collect();
    let jittered = exponential_delay_average(&ev.times, &collected, cfg.jitter_tau)?;
    let blurred = gaussian_blur(&ev.times, &jittered, cfg.detector.irf_fwhm)?;
    let (times, signal) = resample(&ev.times, &blurred, cfg.detector.bin);
    let (_, cavity_flux) = resample(&ev.times, &cavity, cfg.detector.bin);
    let (_, dot_flux) = resample(&ev.times, &dot, cfg.detector.bin);
    let fit = fit_exponential_tail(&times, &signal, times[0])?;
    let one_over_e = one_over_e_time(&times, &signal)?;
    Ok(PlDecay {
        config: cfg.clone(),
        times,
        cavity_flux,
        dot_flux,
        signal,
        fit,
        one_over_e,
        worst: ev.worst,
    })
}
