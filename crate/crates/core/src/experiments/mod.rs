//! Figure-level measurement procedures built on the solvers.
//!
//! Every driver takes an [`ExperimentConfig`] in internal units and returns
//! a serializable result that embeds the configuration it was run with.

mod compare;
mod crossfeed;
mod detuned;
mod g2;
mod pl;
mod pulsed;
mod reflectivity;

pub use compare::{solver_crosscheck, spectra_compare, SolverCrosscheck, SpectraCompare};
pub use crossfeed::{cross_feeding, temperature_series, CrossFeeding, TemperatureSeries};
pub use detuned::{detuned_drive, fit_gamma_d, lifetime_sweep, DetunedDrive, GammaDFit, LifetimeSweep};
pub use g2::{g2_cw_run, g2_pulsed, G2Cw, G2Pulsed};
pub use pl::{pl_decay, PlDecay};
pub use pulsed::{pulsed_reflectivity, PowerTrace, PulsedReflectivity};
pub use reflectivity::{reflectivity_scan, ReflectivityScan};

use serde::{Deserialize, Serialize};

use crate::analysis::interpolate;
use crate::drive::PulseShape;
use crate::dynamics::{evolve_master, with_truncation_escalation, MasterEvolution, Observable, SolverOptions};
use crate::error::{invalid, Error, Result};
use crate::hilbert::{DensityMatrix, PureState, SystemOperators, SystemParams};
use crate::spectra::PumpTarget;
use crate::units::DEFAULT_REFERENCE_WAVELENGTH_NM;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorModel {
    /// FWHM of the Gaussian instrument response, ps.
    pub irf_fwhm: f64,
    /// Output time resolution, ps.
    pub bin: f64,
}

impl Default for DetectorModel {
    fn default() -> Self {
        DetectorModel { irf_fwhm: 3.0, bin: 1.0 }
    }
}

/// Relative detection efficiency of the two emission channels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Collection {
    pub cavity: f64,
    pub dot: f64,
}

impl Default for Collection {
    fn default() -> Self {
        Collection { cavity: 1.0, dot: 0.0 }
    }
}

/// What the "reflectivity" signal is proportional to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ObservableProxy {
    /// Intracavity photon number `⟨a†a⟩`.
    #[default]
    PhotonNumber,
    /// Coherent output `|⟨a⟩|²`.
    CoherentOutput,
}

/// Optical transition addressed by the laser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    #[default]
    Exciton,
    Biexciton,
}

/// Initial state for runs that need one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    /// `|g, 0⟩`
    #[default]
    Ground,
    /// `|e, 0⟩`
    Excited,
}

/// Uniform time grid `start, start + step, …, end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl Default for TimeGrid {
    fn default() -> Self {
        TimeGrid { start: 0.0, end: 300.0, step: 0.5 }
    }
}

impl TimeGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.end > self.start && self.step > 0.0) {
            return Err(invalid("time", "need start < end and step > 0"));
        }
        if (self.end - self.start) / self.step > 1e7 {
            return Err(invalid("time", "too many samples"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<f64> {
        let n = ((self.end - self.start) / self.step).round() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

/// Uniform scan of a frequency (laser detuning or spectral grid), rad/ps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Default for ScanGrid {
    fn default() -> Self {
        ScanGrid { start: -1.0, stop: 1.0, points: 401 }
    }
}

impl ScanGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop > self.start && self.points >= 3) {
            return Err(invalid("scan", "need start < stop and at least 3 points"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.points - 1;
        (0..=n).map(|k| self.start + (self.stop - self.start) * k as f64 / n as f64).collect()
    }
}

/// One point of a temperature tuning table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperaturePoint {
    /// K
    pub temperature: f64,
    /// QD–cavity detuning at this temperature, rad/ps.
    pub delta: f64,
}

/// `γ_d(T) = γ₀ + α₀ T` plus the detuning at each temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TemperatureModel {
    pub gamma0: f64,
    /// rad/ps per K
    pub alpha0: f64,
    pub points: Vec<TemperaturePoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifetimeSettings {
    /// Lifetime to match when fitting `γ_d`, ps.
    pub target: Option<f64>,
    /// Search interval for `γ_d`, rad/ps.
    pub gamma_d_min: f64,
    pub gamma_d_max: f64,
    /// Bisection tolerance on `γ_d`, rad/ps.
    pub tolerance: f64,
}

impl Default for LifetimeSettings {
    fn default() -> Self {
        LifetimeSettings {
            target: None,
            gamma_d_min: 0.0,
            gamma_d_max: 0.05,
            tolerance: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2Settings {
    /// Repetition period, ps (12.5 ns for 80 MHz).
    pub rep_period: f64,
    pub n_pulses: usize,
    /// FWHM of the detector timing jitter, ps.
    pub jitter_fwhm: f64,
    pub n_side: usize,
    /// Simulated time after each pulse, ps.
    pub window: f64,
    pub bin_width: f64,
    /// cw field amplitude for `g2_cw`, rad/ps.
    pub cw_amplitude: f64,
    pub tau_max: f64,
    pub tau_points: usize,
}

impl Default for G2Settings {
    fn default() -> Self {
        G2Settings {
            rep_period: 12_500.0,
            n_pulses: 20_000,
            jitter_fwhm: 300.0,
            n_side: 3,
            window: 1500.0,
            bin_width: 100.0,
            cw_amplitude: 0.002,
            tau_max: 1000.0,
            tau_points: 501,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSettings {
    pub n_traj: usize,
    pub master_seed: u64,
}

impl Default for EnsembleSettings {
    fn default() -> Self {
        EnsembleSettings { n_traj: 1000, master_seed: 2011 }
    }
}

fn default_reference() -> f64 {
    DEFAULT_REFERENCE_WAVELENGTH_NM
}

fn default_n_max_cap() -> usize {
    32
}

fn default_powers() -> Vec<f64> {
    vec![1.0]
}

fn default_pump() -> PumpTarget {
    PumpTarget::Dot
}

/// Complete, unit-resolved description of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub params: SystemParams,
    pub pulse: PulseShape,
    #[serde(default)]
    pub detector: DetectorModel,
    #[serde(default)]
    pub p_dark: f64,
    /// 1/e time of the exponential initialization delay, ps.
    #[serde(default)]
    pub jitter_tau: f64,
    #[serde(default)]
    pub collection: Collection,
    #[serde(default)]
    pub proxy: ObservableProxy,
    #[serde(default)]
    pub transition: Transition,
    #[serde(default)]
    pub initial: InitialState,
    #[serde(default = "default_reference")]
    pub reference_wavelength: f64,
    #[serde(default)]
    pub time: TimeGrid,
    #[serde(default)]
    pub scan: ScanGrid,
    /// Incident powers (nW); the pulse amplitude refers to the first one
    /// and the field scales as `√P`.
    #[serde(default = "default_powers")]
    pub powers: Vec<f64>,
    #[serde(default)]
    pub temperature: TemperatureModel,
    #[serde(default)]
    pub lifetime: LifetimeSettings,
    #[serde(default)]
    pub g2: G2Settings,
    #[serde(default = "default_pump")]
    pub pump_target: PumpTarget,
    #[serde(default)]
    pub ensemble: EnsembleSettings,
    #[serde(default)]
    pub solver: SolverOptions,
    /// Largest truncation tried by the automatic escalation.
    #[serde(default = "default_n_max_cap")]
    pub n_max_cap: usize,
}

impl ExperimentConfig {
    pub fn new(params: SystemParams, pulse: PulseShape) -> Self {
        ExperimentConfig {
            params,
            pulse,
            detector: DetectorModel::default(),
            p_dark: 0.0,
            jitter_tau: 0.0,
            collection: Collection::default(),
            proxy: ObservableProxy::default(),
            transition: Transition::default(),
            initial: InitialState::default(),
            reference_wavelength: DEFAULT_REFERENCE_WAVELENGTH_NM,
            time: TimeGrid::default(),
            scan: ScanGrid::default(),
            powers: default_powers(),
            temperature: TemperatureModel::default(),
            lifetime: LifetimeSettings::default(),
            g2: G2Settings::default(),
            pump_target: PumpTarget::Dot,
            ensemble: EnsembleSettings::default(),
            solver: SolverOptions::default(),
            n_max_cap: default_n_max_cap(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.transition == Transition::Biexciton {
            return Err(Error::Unsupported("biexciton (XX) two-photon driving is outside the model".into()));
        }
        self.params.validate()?;
        self.pulse.validate()?;
        self.solver.validate()?;
        self.time.validate()?;
        self.scan.validate()?;
        if !(0.0..=1.0).contains(&self.p_dark) {
            return Err(invalid("p_dark", format!("must lie in [0, 1], got {}", self.p_dark)));
        }
        if !(self.jitter_tau >= 0.0 && self.jitter_tau.is_finite()) {
            return Err(invalid("jitter_tau", "must be finite and >= 0"));
        }
        if !(self.detector.irf_fwhm >= 0.0 && self.detector.irf_fwhm.is_finite() && self.detector.bin > 0.0) {
            return Err(invalid("detector", "need irf_fwhm >= 0 and bin > 0"));
        }
        if !(self.collection.cavity >= 0.0 && self.collection.dot >= 0.0) {
            return Err(invalid("collection", "weights must be >= 0"));
        }
        if !(self.reference_wavelength > 0.0 && self.reference_wavelength.is_finite()) {
            return Err(invalid("reference_wavelength", "must be positive"));
        }
        if self.powers.is_empty() || self.powers.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(invalid("powers", "need at least one positive power"));
        }
        let tm = &self.temperature;
        if !(tm.gamma0 >= 0.0 && tm.alpha0 >= 0.0) {
            return Err(invalid("temperature", "gamma0 and alpha0 must be >= 0"));
        }
        if tm.points.iter().any(|p| !(p.temperature > 0.0 && p.delta.is_finite())) {
            return Err(invalid("temperature.points", "temperatures must be positive"));
        }
        let l = &self.lifetime;
        if !(l.gamma_d_min >= 0.0 && l.gamma_d_max > l.gamma_d_min && l.tolerance > 0.0) {
            return Err(invalid("lifetime", "need 0 <= gamma_d_min < gamma_d_max and tolerance > 0"));
        }
        let g = &self.g2;
        if !(g.rep_period > 0.0 && g.jitter_fwhm >= 0.0 && g.window > 0.0 && g.bin_width > 0.0) {
            return Err(invalid("g2", "periods and widths must be positive"));
        }
        if !(g.cw_amplitude >= 0.0 && g.tau_max > 0.0 && g.tau_points >= 2) {
            return Err(invalid("g2", "need cw_amplitude >= 0, tau_max > 0 and tau_points >= 2"));
        }
        if self.ensemble.n_traj == 0 {
            return Err(invalid("ensemble.n_traj", "need at least one trajectory"));
        }
        if self.n_max_cap < self.params.n_max {
            return Err(invalid("n_max_cap", "must be >= params.n_max"));
        }
        Ok(())
    }

    /// Pulse scaled to incident power `power` (field ∝ √P).
    pub fn pulse_at_power(&self, power: f64) -> PulseShape {
        let scale = (power / self.powers[0]).sqrt();
        self.pulse.with_amplitude(self.pulse.amplitude * scale)
    }

    /// Runs `f` with automatic truncation escalation.
    pub(crate) fn escalate<T, F>(&self, params: &SystemParams, f: F) -> Result<T>
    where
        F: FnMut(&SystemParams) -> Result<T>,
    {
        with_truncation_escalation(params, self.n_max_cap, f).map(|(v, _)| v)
    }
}

/// Carrier detuning that puts the laser on the dot line.
pub fn dot_resonance(params: &SystemParams) -> f64 {
    -0.5 * params.delta
}

/// Carrier detuning that puts the laser on the cavity line.
pub fn cavity_resonance(params: &SystemParams) -> f64 {
    0.5 * params.delta
}

pub(crate) fn integrate(t: &[f64], y: &[f64]) -> f64 {
    crate::spectra::trapezoid(t, y)
}

/// Reflectivity proxy of a density matrix.
pub(crate) fn proxy_signal(proxy: ObservableProxy, rho: &DensityMatrix, ops: &SystemOperators) -> f64 {
    match proxy {
        ObservableProxy::PhotonNumber => rho.expect(&ops.number).re,
        ObservableProxy::CoherentOutput => rho.expect(&ops.a).norm_sqr(),
    }
}

pub(crate) fn proxy_trace(proxy: ObservableProxy, ev: &MasterEvolution) -> Vec<f64> {
    match proxy {
        ObservableProxy::PhotonNumber => ev.values(Observable::PhotonNumber),
        ObservableProxy::CoherentOutput => ev.values(Observable::CoherentIntensity),
    }
}

pub(crate) fn initial_state(initial: InitialState, n_max: usize) -> Result<PureState> {
    match initial {
        InitialState::Ground => PureState::ground(n_max),
        InitialState::Excited => PureState::basis(n_max, true, 0),
    }
}

/// Master-equation run on the configured time grid, escalating the
/// truncation when needed.
pub(crate) fn master_run(
    cfg: &ExperimentConfig,
    params: &SystemParams,
    drive: Option<&PulseShape>,
    initial: InitialState,
) -> Result<MasterEvolution> {
    let grid = cfg.time.points();
    cfg.escalate(params, |p| {
        let rho0 = initial_state(initial, p.n_max)?.to_density();
        evolve_master(&rho0, &grid, p, drive, &cfg.solver)
    })
}

/// Linear resampling of `(t, y)` onto the detector bins.
pub(crate) fn resample(t: &[f64], y: &[f64], bin: f64) -> (Vec<f64>, Vec<f64>) {
    let t0 = t[0];
    let n = ((t[t.len() - 1] - t0) / bin + 1e-9).floor() as usize;
    let tb: Vec<f64> = (0..=n).map(|k| t0 + k as f64 * bin).collect();
    let yb = tb.iter().map(|&x| interpolate(t, y, x)).collect();
    (tb, yb)
}

/// Full width at half maximum of the local peak nearest `x0`, or `None`
/// when either half-maximum crossing lies outside the record.
pub(crate) fn local_fwhm(x: &[f64], y: &[f64], x0: f64) -> Option<f64> {
    let mut k = x.partition_point(|v| *v < x0).min(x.len() - 1);
    loop {
        if k > 0 && y[k - 1] > y[k] {
            k -= 1;
        } else if k + 1 < y.len() && y[k + 1] > y[k] {
            k += 1;
        } else {
            break;
        }
    }
    let half = y[k] / 2.0;
    let lo = (0..k).rev().find(|&i| y[i] < half)?;
    let hi = (k + 1..y.len()).find(|&i| y[i] < half)?;
    let xl = x[lo] + (half - y[lo]) / (y[lo + 1] - y[lo]) * (x[lo + 1] - x[lo]);
    let xh = x[hi - 1] + (y[hi - 1] - half) / (y[hi - 1] - y[hi]) * (x[hi] - x[hi - 1]);
    Some(xh - xl)
}
