use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{dot_resonance, proxy_signal, ExperimentConfig};
use crate::analysis::{find_peaks, interpolate};
use crate::drive::{PulseKind, PulseShape};
use crate::dynamics::steady_state;
use crate::error::{invalid, Result};
use crate::hilbert::{SystemOperators, SystemParams};
use crate::spectra::linear_coeffs;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectivityScan {
    pub config: ExperimentConfig,
    /// Laser carrier detuning from the reference frequency, rad/ps.
    pub detuning: Vec<f64>,
    pub coupled: Vec<f64>,
    /// Same scan with `g = 0`.
    pub empty: Vec<f64>,
    /// `p_dark · empty + (1 − p_dark) · coupled`
    pub signal: Vec<f64>,
    /// Peaks of `signal` as (detuning, value), highest first.
    pub peaks: Vec<(f64, f64)>,
    /// Distance between the two highest peaks.
    pub peak_separation: Option<f64>,
    /// `|Im(λ₊ − λ₋)|` of the linear model.
    pub pole_splitting: f64,
    /// Signal on the dot resonance over the highest peak.
    pub center_ratio: f64,
}

fn scan(cfg: &ExperimentConfig, params: &SystemParams, detuning: &[f64]) -> Result<Vec<f64>> {
    detuning
        .par_iter()
        .map(|&w| {
            let drive = PulseShape {
                carrier_detuning: w,
                ..cfg.pulse
            };
            cfg.escalate(params, |p| {
                let rho = steady_state(p, Some(&drive))?;
                let ops = SystemOperators::new(p.n_max)?;
                Ok(proxy_signal(cfg.proxy, &rho, &ops))
            })
        })
        .collect()
}

/// Steady-state cross-polarized signal while the cw laser is tuned across
/// the coupled system.
pub fn reflectivity_scan(cfg: &ExperimentConfig) -> Result<ReflectivityScan> {
    cfg.validate()?;
    if cfg.pulse.kind != PulseKind::Cw {
        return Err(invalid("pulse.kind", "reflectivity scan needs a cw laser"));
    }
    let detuning = cfg.scan.values();
    let coupled = scan(cfg, &cfg.params, &detuning)?;
    let empty = if cfg.p_dark > 0.0 {
        scan(cfg, &cfg.params.with_g(0.0), &detuning)?
    } else {
        vec![0.0; detuning.len()]
    };
    let signal: Vec<f64> = coupled
        .iter()
        .zip(&empty)
        .map(|(c, e)| cfg.p_dark * e + (1.0 - cfg.p_dark) * c)
        .collect();
    let mut peaks = find_peaks(&detuning, &signal, 1e-3);
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    let peak_separation = (peaks.len() >= 2).then(|| (peaks[0].0 - peaks[1].0).abs());
    let top = signal.iter().copied().fold(0.0, f64::max);
    let center = interpolate(&detuning, &signal, dot_resonance(&cfg.params));
    Ok(ReflectivityScan {
        config: cfg.clone(),
        pole_splitting: linear_coeffs(&cfg.params)?.splitting(),
        center_ratio: if top > 0.0 { center / top } else { 0.0 },
        detuning,
        coupled,
        empty,
        signal,
        peaks,
        peak_separation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::DriveTarget;

    fn config(g: f64) -> ExperimentConfig {
        let p = SystemParams::new(g, 0.2, 0.002, 0.0, 0.0, 3).unwrap();
        let mut c = ExperimentConfig::new(p, PulseShape::cw(0.001, 0.0, DriveTarget::Cavity));
        c.scan = super::super::ScanGrid { start: -1.0, stop: 1.0, points: 201 };
        c
    }

    #[test]
    fn empty_cavity_is_a_lorentzian_of_width_kappa() {
        let c = config(0.0);
        let r = reflectivity_scan(&c).unwrap();
        // weak-drive oracle: n = E² / (w² + κ²/4)
        for (w, s) in r.detuning.iter().zip(&r.signal) {
            let n = 1e-6 / (w * w + 0.01);
            assert!((s - n).abs() < 1e-6 * n, "{w}: {s} vs {n}");
        }
        let width = crate::analysis::fwhm(&r.detuning, &r.signal).unwrap();
        assert!((width - 0.2).abs() < 2e-3, "{width}");
    }

    #[test]
    fn coupled_scan_shows_a_doublet_with_a_dip() {
        let r = reflectivity_scan(&config(0.15)).unwrap();
        assert!(r.peak_separation.unwrap() > 0.2);
        assert!(r.center_ratio < 0.3);
    }

    #[test]
    fn shape_does_not_depend_on_weak_amplitude() {
        let mut c = config(0.15);
        let a = reflectivity_scan(&c).unwrap();
        c.pulse.amplitude = 0.0005;
        let b = reflectivity_scan(&c).unwrap();
        let (ma, mb) = (a.signal.iter().copied().fold(0.0, f64::max), b.signal.iter().copied().fold(0.0, f64::max));
        for (x, y) in a.signal.iter().zip(&b.signal) {
            assert!((x / ma - y / mb).abs() < 1e-3);
        }
    }

    #[test]
    fn dark_fraction_one_gives_empty_cavity() {
        let mut c = config(0.15);
        c.p_dark = 1.0;
        let r = reflectivity_scan(&c).unwrap();
        assert_eq!(r.signal, r.empty);
        assert!(r.peak_separation.is_none());
    }
}
