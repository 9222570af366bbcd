use serde::{Deserialize, Serialize};

use super::{initial_state, ExperimentConfig};
use crate::dynamics::evolve_master;
use crate::error::Result;
use crate::mcwf::{ensemble_average, TrajectoryOptions};
use crate::spectra::{analytic_spectrum, numerical_spectrum, relative_l2, SpectrumOptions, SpectrumResult, SpectrumSource};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectraCompare {
    pub config: ExperimentConfig,
    pub analytic: SpectrumResult,
    pub numerical: SpectrumResult,
    /// Relative L2 distance of the normalized cavity spectra.
    pub l2_cav: f64,
    pub l2_qd: f64,
}

/// Linear-model spectra against the quantum-regression spectra of the full
/// model, seeded with one excitation in the configured mode.
pub fn spectra_compare(cfg: &ExperimentConfig) -> Result<SpectraCompare> {
    cfg.validate()?;
    let omega = cfg.scan.values();
    let analytic = analytic_spectrum(&cfg.params, cfg.pump_target, &omega)?;
    let opts = SpectrumOptions {
        solver: cfg.solver,
        ..SpectrumOptions::default()
    };
    let numerical = numerical_spectrum(&cfg.params, SpectrumSource::Pump(cfg.pump_target), &omega, &opts)?;
    Ok(SpectraCompare {
        config: cfg.clone(),
        l2_cav: relative_l2(&omega, &numerical.s_cav, &analytic.s_cav)?,
        l2_qd: relative_l2(&omega, &numerical.s_qd, &analytic.s_qd)?,
        analytic,
        numerical,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverCrosscheck {
    pub config: ExperimentConfig,
    pub times: Vec<f64>,
    /// `⟨a†a⟩` from the master equation.
    pub master: Vec<f64>,
    pub mcwf_mean: Vec<f64>,
    pub mcwf_stderr: Vec<f64>,
    /// Allowed deviation `3·max(SE, max⟨a†a⟩/N)` at each time.
    pub bound: Vec<f64>,
    /// Grid points outside the bound.
    pub violations: usize,
    /// Largest `|mean − master| / bound`.
    pub worst_ratio: f64,
}

/// Ensemble-averaged trajectories against the master equation for the
/// configured drive and initial state.
pub fn solver_crosscheck(cfg: &ExperimentConfig) -> Result<SolverCrosscheck> {
    cfg.validate()?;
    let grid = cfg.time.points();
    let drive = Some(&cfg.pulse).filter(|p| p.amplitude > 0.0);
    let topts = TrajectoryOptions {
        solver: cfg.solver,
        ..TrajectoryOptions::default()
    };
    let (master, ens) = cfg.escalate(&cfg.params, |p| {
        let psi0 = initial_state(cfg.initial, p.n_max)?;
        let ev = evolve_master(&psi0.to_density(), &grid, p, drive, &cfg.solver)?;
        let ens = ensemble_average(&psi0, &grid, p, drive, cfg.ensemble.n_traj, cfg.ensemble.master_seed, &topts)?;
        Ok((ev.photon_number, ens))
    })?;
    // the sample error collapses when only a few trajectories carry the
    // signal (rare jumps), so it is floored at one trajectory's share of
    // the peak
    let floor = master.iter().copied().fold(0.0, f64::max) / cfg.ensemble.n_traj as f64;
    let bound: Vec<f64> = ens.photon_stderr.iter().map(|s| 3.0 * s.max(floor)).collect();
    let ratios: Vec<f64> = master
        .iter()
        .zip(&ens.photon_mean)
        .zip(&bound)
        .map(|((m, e), b)| if *b > 0.0 { (m - e).abs() / b } else { 0.0 })
        .collect();
    Ok(SolverCrosscheck {
        config: cfg.clone(),
        violations: ratios.iter().filter(|r| **r > 1.0).count(),
        worst_ratio: ratios.iter().copied().fold(0.0, f64::max),
        times: grid,
        master,
        mcwf_mean: ens.photon_mean,
        mcwf_stderr: ens.photon_stderr,
        bound,
    })
}
