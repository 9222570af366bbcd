//! TOML experiment files with explicit units on every physical quantity.
//!
//! Frequencies and rates accept `rad/ps`, `1/ps`, `GHz` (ordinary
//! frequency, multiplied by 2π) and `ueV`. Decay rates also accept `Q`
//! (`"10000 Q"` is ω_ref/Q). Frequency offsets accept `nm` at the
//! reference wavelength; for the QD–cavity detuning `nm` means
//! `λ_qd − λ_cavity`. Times take `fs`, `ps`, `ns`; powers `nW`, `uW`, `mW`;
//! temperatures `K`; the dephasing slope `ueV/K`, `GHz/K` or `rad/ps/K`.

use serde::Deserialize;

use cqed::experiments::{
    Collection, DetectorModel, EnsembleSettings, ExperimentConfig, G2Settings, InitialState, LifetimeSettings,
    ObservableProxy, ScanGrid, TemperatureModel, TemperaturePoint, TimeGrid, Transition,
};
use cqed::spectra::PumpTarget;
use cqed::units::{
    detuning_from_wavelength_difference, ghz_to_rad_per_ps, q_to_rad_per_ps, ue_v_to_rad_per_ps,
    wavelength_offset_to_rad_per_ps, Unit, DEFAULT_REFERENCE_WAVELENGTH_NM,
};
use cqed::{DriveTarget, PulseKind, PulseShape, SystemParams};

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    reference_wavelength: Option<String>,
    params: RawParams,
    pulse: RawPulse,
    detector: Option<RawDetector>,
    p_dark: Option<f64>,
    jitter_tau: Option<String>,
    collection: Option<RawCollection>,
    proxy: Option<ObservableProxy>,
    transition: Option<Transition>,
    initial: Option<InitialState>,
    pump_target: Option<PumpTarget>,
    time: Option<RawTime>,
    scan: Option<RawScan>,
    powers: Option<Vec<String>>,
    temperature: Option<RawTemperature>,
    lifetime: Option<RawLifetime>,
    g2: Option<RawG2>,
    ensemble: Option<RawEnsemble>,
    solver: Option<RawSolver>,
    n_max_cap: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    g: String,
    kappa: String,
    gamma: String,
    gamma_d: String,
    delta: Option<String>,
    n_max: usize,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawTarget {
    Name(String),
    Weights { cavity: f64, dot: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPulse {
    kind: PulseKind,
    amplitude: String,
    center: Option<String>,
    fwhm: Option<String>,
    /// `"dot"`, `"cavity"` or a frequency offset from the mean of the two.
    carrier: Option<String>,
    phase: Option<f64>,
    target: RawTarget,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetector {
    irf_fwhm: Option<String>,
    bin: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCollection {
    cavity: f64,
    dot: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTime {
    start: String,
    end: String,
    step: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScan {
    start: String,
    stop: String,
    points: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTemperaturePoint {
    temperature: String,
    delta: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTemperature {
    gamma0: String,
    alpha0: String,
    #[serde(default)]
    points: Vec<RawTemperaturePoint>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLifetime {
    target: Option<String>,
    gamma_d_min: Option<String>,
    gamma_d_max: Option<String>,
    tolerance: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawG2 {
    rep_period: Option<String>,
    n_pulses: Option<usize>,
    jitter_fwhm: Option<String>,
    n_side: Option<usize>,
    window: Option<String>,
    bin_width: Option<String>,
    cw_amplitude: Option<String>,
    tau_max: Option<String>,
    tau_points: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnsemble {
    n_traj: Option<usize>,
    master_seed: Option<u64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    rtol: Option<f64>,
    atol: Option<f64>,
    max_steps: Option<usize>,
}

/// Physical dimension expected for a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dim {
    /// Rate or coupling, rad/ps.
    Rate,
    /// Frequency offset from the reference frequency, rad/ps.
    Offset,
    /// `ω_c − ω_qd`, rad/ps.
    Detuning,
    /// ps
    Time,
    /// nW
    Power,
    /// K
    Temperature,
    /// rad/ps per K
    RatePerKelvin,
}

fn split(path: &str, text: &str) -> Result<(f64, String), CliError> {
    let text = text.trim();
    let cut = text
        .find(|c: char| c.is_whitespace())
        .ok_or_else(|| CliError::schema(path, format!("`{text}` needs a unit, e.g. \"25 GHz\"")))?;
    let (num, unit) = text.split_at(cut);
    let value: f64 = num
        .parse()
        .map_err(|_| CliError::schema(path, format!("`{num}` is not a number")))?;
    if !value.is_finite() {
        return Err(CliError::schema(path, "value must be finite"));
    }
    Ok((value, unit.trim().to_string()))
}

/// Parses `"<number> <unit>"` into internal units.
pub fn parse_quantity(path: &str, text: &str, dim: Dim, reference_nm: f64) -> Result<f64, CliError> {
    let (v, unit) = split(path, text)?;
    let bad = || CliError::schema(path, format!("unit `{unit}` does not fit a {}", dim_name(dim)));
    match dim {
        Dim::Time => match unit.as_str() {
            "fs" => Ok(v * 1e-3),
            "ps" => Ok(v),
            "ns" => Ok(v * 1e3),
            _ => Err(bad()),
        },
        Dim::Power => match unit.as_str() {
            "nW" => Ok(v),
            "uW" | "μW" | "µW" => Ok(v * 1e3),
            "mW" => Ok(v * 1e6),
            _ => Err(bad()),
        },
        Dim::Temperature => match unit.as_str() {
            "K" => Ok(v),
            _ => Err(bad()),
        },
        Dim::RatePerKelvin => {
            let per = unit.strip_suffix("/K").ok_or_else(bad)?;
            match per.parse::<Unit>().map_err(|_| bad())? {
                Unit::RadPerPs => Ok(v),
                Unit::GHz => Ok(ghz_to_rad_per_ps(v)),
                Unit::MicroEv => Ok(ue_v_to_rad_per_ps(v)),
                _ => Err(bad()),
            }
        }
        Dim::Rate | Dim::Offset | Dim::Detuning => {
            let u = if unit == "1/ps" { Unit::RadPerPs } else { unit.parse::<Unit>().map_err(|_| bad())? };
            match (u, dim) {
                (Unit::RadPerPs, _) => Ok(v),
                (Unit::GHz, _) => Ok(ghz_to_rad_per_ps(v)),
                (Unit::MicroEv, _) => Ok(ue_v_to_rad_per_ps(v)),
                (Unit::Q, Dim::Rate) if v > 0.0 => Ok(q_to_rad_per_ps(v, reference_nm)),
                (Unit::Nm, Dim::Offset) => Ok(wavelength_offset_to_rad_per_ps(v, reference_nm)),
                (Unit::Nm, Dim::Detuning) => Ok(detuning_from_wavelength_difference(v, reference_nm)),
                _ => Err(bad()),
            }
        }
    }
}

fn dim_name(dim: Dim) -> &'static str {
    match dim {
        Dim::Rate => "rate (rad/ps, 1/ps, GHz, ueV or Q)",
        Dim::Offset => "frequency offset (rad/ps, GHz, ueV or nm)",
        Dim::Detuning => "detuning (rad/ps, GHz, ueV or nm)",
        Dim::Time => "time (fs, ps or ns)",
        Dim::Power => "power (nW, uW or mW)",
        Dim::Temperature => "temperature (K)",
        Dim::RatePerKelvin => "rate per kelvin (ueV/K, GHz/K or rad/ps/K)",
    }
}

struct Ctx {
    reference: f64,
}

impl Ctx {
    fn q(&self, path: &str, text: &str, dim: Dim) -> Result<f64, CliError> {
        parse_quantity(path, text, dim, self.reference)
    }

    fn opt(&self, path: &str, text: &Option<String>, dim: Dim, default: f64) -> Result<f64, CliError> {
        match text {
            Some(t) => self.q(path, t, dim),
            None => Ok(default),
        }
    }
}

/// Parses and resolves a TOML experiment file into internal units. Does not
/// run the physics validation; see [`ExperimentConfig::validate`].
pub fn parse_config(text: &str) -> Result<ExperimentConfig, CliError> {
    let de = toml::Deserializer::parse(text).map_err(|e| CliError::schema("", e.to_string().trim()))?;
    let raw: RawConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner().to_string();
        let msg = inner.trim().to_string();
        // serde reports a missing key against its parent table
        let path = match missing_field(&msg) {
            Some(f) if path == "." || path.is_empty() => f.to_string(),
            Some(f) => format!("{path}.{f}"),
            None => path,
        };
        CliError::schema(&path, msg)
    })?;
    resolve(raw)
}

fn missing_field(msg: &str) -> Option<&str> {
    let rest = msg.split("missing field `").nth(1)?;
    rest.split('`').next()
}

fn resolve(raw: RawConfig) -> Result<ExperimentConfig, CliError> {
    let reference = match &raw.reference_wavelength {
        Some(t) => {
            let (v, unit) = split("reference_wavelength", t)?;
            if unit != "nm" || v <= 0.0 {
                return Err(CliError::schema("reference_wavelength", "needs a positive value in nm"));
            }
            v
        }
        None => DEFAULT_REFERENCE_WAVELENGTH_NM,
    };
    let cx = Ctx { reference };
    let rp = &raw.params;
    let params = SystemParams {
        g: cx.q("params.g", &rp.g, Dim::Rate)?,
        kappa: cx.q("params.kappa", &rp.kappa, Dim::Rate)?,
        gamma: cx.q("params.gamma", &rp.gamma, Dim::Rate)?,
        gamma_d: cx.q("params.gamma_d", &rp.gamma_d, Dim::Rate)?,
        delta: cx.opt("params.delta", &rp.delta, Dim::Detuning, 0.0)?,
        n_max: rp.n_max,
    };

    let pp = &raw.pulse;
    let target = match &pp.target {
        RawTarget::Name(n) if n == "cavity" => DriveTarget::Cavity,
        RawTarget::Name(n) if n == "dot" => DriveTarget::Dot,
        RawTarget::Name(n) => {
            return Err(CliError::schema("pulse.target", format!("`{n}`: expected \"cavity\", \"dot\" or {{ cavity, dot }}")))
        }
        RawTarget::Weights { cavity, dot } => DriveTarget::Both { cavity: *cavity, dot: *dot },
    };
    let carrier = match pp.carrier.as_deref().map(str::trim) {
        None => 0.0,
        Some("dot") => -0.5 * params.delta,
        Some("cavity") => 0.5 * params.delta,
        Some(t) => cx.q("pulse.carrier", t, Dim::Offset)?,
    };
    let (center, fwhm) = match pp.kind {
        PulseKind::Cw => (cx.opt("pulse.center", &pp.center, Dim::Time, 0.0)?, cx.opt("pulse.fwhm", &pp.fwhm, Dim::Time, 0.0)?),
        PulseKind::Gaussian => {
            let c = pp.center.as_ref().ok_or_else(|| CliError::schema("pulse.center", "missing field `center`"))?;
            let f = pp.fwhm.as_ref().ok_or_else(|| CliError::schema("pulse.fwhm", "missing field `fwhm`"))?;
            (cx.q("pulse.center", c, Dim::Time)?, cx.q("pulse.fwhm", f, Dim::Time)?)
        }
    };
    let pulse = PulseShape {
        kind: pp.kind,
        amplitude: cx.q("pulse.amplitude", &pp.amplitude, Dim::Rate)?,
        center,
        fwhm,
        carrier_detuning: carrier,
        phase: pp.phase.unwrap_or(0.0),
        target,
    };

    let mut cfg = ExperimentConfig::new(params, pulse);
    cfg.reference_wavelength = reference;
    if let Some(d) = &raw.detector {
        let def = DetectorModel::default();
        cfg.detector = DetectorModel {
            irf_fwhm: cx.opt("detector.irf_fwhm", &d.irf_fwhm, Dim::Time, def.irf_fwhm)?,
            bin: cx.opt("detector.bin", &d.bin, Dim::Time, def.bin)?,
        };
    }
    cfg.p_dark = raw.p_dark.unwrap_or(0.0);
    cfg.jitter_tau = cx.opt("jitter_tau", &raw.jitter_tau, Dim::Time, 0.0)?;
    if let Some(c) = &raw.collection {
        cfg.collection = Collection { cavity: c.cavity, dot: c.dot };
    }
    cfg.proxy = raw.proxy.unwrap_or_default();
    cfg.transition = raw.transition.unwrap_or_default();
    cfg.initial = raw.initial.unwrap_or_default();
    cfg.pump_target = raw.pump_target.unwrap_or(PumpTarget::Dot);
    if let Some(t) = &raw.time {
        cfg.time = TimeGrid {
            start: cx.q("time.start", &t.start, Dim::Time)?,
            end: cx.q("time.end", &t.end, Dim::Time)?,
            step: cx.q("time.step", &t.step, Dim::Time)?,
        };
    }
    if let Some(s) = &raw.scan {
        cfg.scan = ScanGrid {
            start: cx.q("scan.start", &s.start, Dim::Offset)?,
            stop: cx.q("scan.stop", &s.stop, Dim::Offset)?,
            points: s.points,
        };
    }
    if let Some(p) = &raw.powers {
        cfg.powers = p
            .iter()
            .enumerate()
            .map(|(i, t)| cx.q(&format!("powers[{i}]"), t, Dim::Power))
            .collect::<Result<_, _>>()?;
    }
    if let Some(t) = &raw.temperature {
        cfg.temperature = TemperatureModel {
            gamma0: cx.q("temperature.gamma0", &t.gamma0, Dim::Rate)?,
            alpha0: cx.q("temperature.alpha0", &t.alpha0, Dim::RatePerKelvin)?,
            points: t
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| {
                    Ok(TemperaturePoint {
                        temperature: cx.q(&format!("temperature.points[{i}].temperature"), &p.temperature, Dim::Temperature)?,
                        delta: cx.q(&format!("temperature.points[{i}].delta"), &p.delta, Dim::Detuning)?,
                    })
                })
                .collect::<Result<_, CliError>>()?,
        };
    }
    if let Some(l) = &raw.lifetime {
        let def = LifetimeSettings::default();
        cfg.lifetime = LifetimeSettings {
            target: l.target.as_ref().map(|t| cx.q("lifetime.target", t, Dim::Time)).transpose()?,
            gamma_d_min: cx.opt("lifetime.gamma_d_min", &l.gamma_d_min, Dim::Rate, def.gamma_d_min)?,
            gamma_d_max: cx.opt("lifetime.gamma_d_max", &l.gamma_d_max, Dim::Rate, def.gamma_d_max)?,
            tolerance: cx.opt("lifetime.tolerance", &l.tolerance, Dim::Rate, def.tolerance)?,
        };
    }
    if let Some(g) = &raw.g2 {
        let def = G2Settings::default();
        cfg.g2 = G2Settings {
            rep_period: cx.opt("g2.rep_period", &g.rep_period, Dim::Time, def.rep_period)?,
            n_pulses: g.n_pulses.unwrap_or(def.n_pulses),
            jitter_fwhm: cx.opt("g2.jitter_fwhm", &g.jitter_fwhm, Dim::Time, def.jitter_fwhm)?,
            n_side: g.n_side.unwrap_or(def.n_side),
            window: cx.opt("g2.window", &g.window, Dim::Time, def.window)?,
            bin_width: cx.opt("g2.bin_width", &g.bin_width, Dim::Time, def.bin_width)?,
            cw_amplitude: cx.opt("g2.cw_amplitude", &g.cw_amplitude, Dim::Rate, def.cw_amplitude)?,
            tau_max: cx.opt("g2.tau_max", &g.tau_max, Dim::Time, def.tau_max)?,
            tau_points: g.tau_points.unwrap_or(def.tau_points),
        };
    }
    if let Some(e) = &raw.ensemble {
        let def = EnsembleSettings::default();
        cfg.ensemble = EnsembleSettings {
            n_traj: e.n_traj.unwrap_or(def.n_traj),
            master_seed: e.master_seed.unwrap_or(def.master_seed),
        };
    }
    if let Some(s) = &raw.solver {
        let def = cfg.solver;
        cfg.solver.rtol = s.rtol.unwrap_or(def.rtol);
        cfg.solver.atol = s.atol.unwrap_or(def.atol);
        cfg.solver.max_steps = s.max_steps.unwrap_or(def.max_steps);
    }
    if let Some(cap) = raw.n_max_cap {
        cfg.n_max_cap = cap;
    }
    Ok(cfg)
}

/// Canonical JSON of a resolved configuration: sorted keys, no whitespace,
/// shortest round-trip floats.
pub fn canonical_json(cfg: &ExperimentConfig) -> String {
    let v = serde_json::to_value(cfg).expect("configuration serializes");
    serde_json::to_string(&v).expect("json value serializes")
}

/// SHA-256 of [`canonical_json`], hex encoded.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(canonical_json(cfg).as_bytes()))
}
