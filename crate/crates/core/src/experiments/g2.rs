use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::drive::PulseShape;
use crate::dynamics::g2_cw;
use crate::error::Result;
use crate::generator::Channel;
use crate::mcwf::{pulsed_g2_histogram, PulsedG2Options, PulsedG2Result, TrajectoryOptions};

const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Cw {
    pub config: ExperimentConfig,
    pub tau: Vec<f64>,
    pub g2: Vec<f64>,
    pub g2_zero: f64,
    /// Value at the largest delay.
    pub g2_tail: f64,
}

/// Steady-state `g²(τ)` of the cavity output under the cw laser
/// `g2.cw_amplitude` at the configured carrier.
pub fn g2_cw_run(cfg: &ExperimentConfig) -> Result<G2Cw> {
    cfg.validate()?;
    let drive = PulseShape::cw(cfg.g2.cw_amplitude, cfg.pulse.carrier_detuning, cfg.pulse.target);
    let n = cfg.g2.tau_points - 1;
    let tau: Vec<f64> = (0..=n).map(|k| cfg.g2.tau_max * k as f64 / n as f64).collect();
    let r = cfg.escalate(&cfg.params, |p| g2_cw(p, &drive, &tau, &cfg.solver))?;
    let g2: Vec<f64> = r.values.iter().map(|z| z.re).collect();
    Ok(G2Cw {
        config: cfg.clone(),
        g2_zero: g2[0],
        g2_tail: g2[n],
        tau,
        g2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct G2Pulsed {
    pub config: ExperimentConfig,
    pub result: PulsedG2Result,
}

/// Simulated start-stop coincidence histogram for the pulse train.
pub fn g2_pulsed(cfg: &ExperimentConfig) -> Result<G2Pulsed> {
    cfg.validate()?;
    let channel = if cfg.collection.cavity >= cfg.collection.dot {
        Channel::Cavity
    } else {
        Channel::Dot
    };
    let opts = PulsedG2Options {
        rep_period: cfg.g2.rep_period,
        n_pulses: cfg.g2.n_pulses,
        jitter_sigma: cfg.g2.jitter_fwhm / FWHM_PER_SIGMA,
        n_side: cfg.g2.n_side,
        window: cfg.g2.window,
        bin_width: cfg.g2.bin_width,
        channel,
        master_seed: cfg.ensemble.master_seed,
        trajectory: TrajectoryOptions {
            solver: cfg.solver,
            ..TrajectoryOptions::default()
        },
    };
    let result = cfg.escalate(&cfg.params, |p| pulsed_g2_histogram(p, &cfg.pulse, &opts))?;
    Ok(G2Pulsed {
        config: cfg.clone(),
        result,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::DriveTarget;
    use crate::hilbert::SystemParams;

    #[test]
    fn empty_cavity_cw_light_is_coherent() {
        let p = SystemParams::new(0.0, 0.2, 0.01, 0.0, 0.0, 6).unwrap();
        let mut c = ExperimentConfig::new(p, PulseShape::cw(0.0, 0.0, DriveTarget::Cavity));
        c.g2.cw_amplitude = 0.01;
        c.g2.tau_max = 50.0;
        c.g2.tau_points = 26;
        let r = g2_cw_run(&c).unwrap();
        assert!(r.g2.iter().all(|v| (v - 1.0).abs() < 1e-6), "{:?}", r.g2);
    }

    #[test]
    fn weakly_driven_detuned_dot_antibunches() {
        let p = SystemParams::new(0.15708, 0.20474, 0.0076, 0.015708, -2.67, 3).unwrap();
        let mut c = ExperimentConfig::new(p, PulseShape::cw(0.0, 1.335, DriveTarget::Dot));
        c.g2.cw_amplitude = 0.001;
        c.g2.tau_max = 2000.0;
        c.g2.tau_points = 401;
        let r = g2_cw_run(&c).unwrap();
        assert!(r.g2_zero < 0.5, "{}", r.g2_zero);
        assert!((r.g2_tail - 1.0).abs() < 0.01, "{}", r.g2_tail);
    }
}
