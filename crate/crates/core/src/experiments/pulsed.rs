use serde::{Deserialize, Serialize};

use super::{proxy_trace, resample, ExperimentConfig, InitialState};
use crate::analysis::{find_peaks, gaussian_blur};
use crate::drive::PulseKind;
use crate::error::{invalid, Result};
use crate::hilbert::StateDiagnostics;

/// Detected trace at one incident power.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerTrace {
    /// nW
    pub power: f64,
    pub amplitude: f64,
    /// Detector bins, ps.
    pub times: Vec<f64>,
    pub coupled: Vec<f64>,
    pub empty: Vec<f64>,
    /// Dark-state mixture after the instrument response.
    pub signal: Vec<f64>,
    /// Local maxima of `signal` after the pulse (`t ≥ center + fwhm`), in
    /// time order.
    pub peaks: Vec<(f64, f64)>,
    /// Spacing of the first two maxima, ps.
    pub period: Option<f64>,
    /// `(y_max − y_min) / (y_max + y_min)` between the first two maxima.
    pub visibility: f64,
    pub worst: StateDiagnostics,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulsedReflectivity {
    pub config: ExperimentConfig,
    pub traces: Vec<PowerTrace>,
}

/// Time-resolved cross-polarized signal after a short pulse, for every
/// configured power.
pub fn pulsed_reflectivity(cfg: &ExperimentConfig) -> Result<PulsedReflectivity> {
    cfg.validate()?;
    if cfg.pulse.kind != PulseKind::Gaussian {
        return Err(invalid("pulse.kind", "pulsed reflectivity needs a gaussian pulse"));
    }
    let mut traces = Vec::with_capacity(cfg.powers.len());
    for &power in &cfg.powers {
        let pulse = cfg.pulse_at_power(power);
        let ev = super::master_run(cfg, &cfg.params, Some(&pulse), InitialState::Ground)?;
        let coupled = proxy_trace(cfg.proxy, &ev);
        let (empty, worst) = if cfg.p_dark > 0.0 {
            let e = super::master_run(cfg, &cfg.params.with_g(0.0), Some(&pulse), InitialState::Ground)?;
            (proxy_trace(cfg.proxy, &e), worse(ev.worst, e.worst))
        } else {
            (vec![0.0; coupled.len()], ev.worst)
        };
        let mixed: Vec<f64> = coupled
            .iter()
            .zip(&empty)
            .map(|(c, e)| cfg.p_dark * e + (1.0 - cfg.p_dark) * c)
            .collect();
        let blurred = gaussian_blur(&ev.times, &mixed, cfg.detector.irf_fwhm)?;
        let (times, signal) = resample(&ev.times, &blurred, cfg.detector.bin);
        let (_, coupled) = resample(&ev.times, &coupled, cfg.detector.bin);
        let (_, empty) = resample(&ev.times, &empty, cfg.detector.bin);
        // ringing is only free once the pulse has passed
        let after = pulse.center + pulse.fwhm;
        let mut peaks: Vec<(f64, f64)> = find_peaks(&times, &signal, 1e-3)
            .into_iter()
            .filter(|p| p.0 >= after)
            .collect();
        peaks.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (period, visibility, warning) = if peaks.len() >= 2 {
            let (t1, t2) = (peaks[0].0, peaks[1].0);
            let top = peaks[0].1.max(peaks[1].1);
            let low = times
                .iter()
                .zip(&signal)
                .filter(|(t, _)| **t >= t1 && **t <= t2)
                .map(|(_, y)| *y)
                .fold(f64::INFINITY, f64::min);
            (Some(t2 - t1), (top - low) / (top + low), None)
        } else {
            (None, 0.0, Some(format!("fewer than two oscillation maxima resolved at {power} nW")))
        };
        if let Some(w) = &warning {
            log::warn!("{w}");
        }
        traces.push(PowerTrace {
            power,
            amplitude: pulse.amplitude,
            times,
            coupled,
            empty,
            signal,
            peaks,
            period,
            visibility,
            worst,
            warning,
        });
    }
    Ok(PulsedReflectivity {
        config: cfg.clone(),
        traces,
    })
}

pub(crate) fn worse(a: StateDiagnostics, b: StateDiagnostics) -> StateDiagnostics {
    StateDiagnostics {
        trace_error: a.trace_error.max(b.trace_error),
        hermiticity_error: a.hermiticity_error.max(b.hermiticity_error),
        min_eigenvalue: a.min_eigenvalue.min(b.min_eigenvalue),
    }
}
