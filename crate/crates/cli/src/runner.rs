use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use clap::ValueEnum;

use cqed::experiments::{self as ex, ExperimentConfig};

use crate::config::config_hash;
use crate::error::CliError;
use crate::output::{render_sidecar, write_csv, Column, RunManifest, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Experiment {
    ReflectivityScan,
    PulsedReflectivity,
    PlDecay,
    DetunedDrive,
    CrossFeeding,
    TemperatureSeries,
    G2Cw,
    G2Pulsed,
    SpectraCompare,
    SolverCrosscheck,
}

impl Experiment {
    pub fn name(&self) -> String {
        self.to_possible_value().expect("no skipped variants").get_name().to_string()
    }
}

/// Tables, scalars and warnings produced by one experiment.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub tables: Vec<Table>,
    pub metrics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

const RATE: &str = "rad/ps";
const FLUX: &str = "1/ps";

pub fn run_experiment(cfg: &ExperimentConfig, which: Experiment) -> cqed::Result<RunOutput> {
    let mut out = RunOutput::default();
    let metric = |out: &mut RunOutput, k: &str, v: f64| {
        out.metrics.insert(k.to_string(), v);
    };
    match which {
        Experiment::ReflectivityScan => {
            let r = ex::reflectivity_scan(cfg)?;
            out.tables.push(Table::new(
                "reflectivity",
                vec![
                    Column::new("laser_detuning", RATE, r.detuning),
                    Column::new("coupled", "photons", r.coupled),
                    Column::new("empty", "photons", r.empty),
                    Column::new("signal", "photons", r.signal),
                ],
            ));
            if let Some(s) = r.peak_separation {
                metric(&mut out, "peak_separation", s);
            }
            metric(&mut out, "pole_splitting", r.pole_splitting);
            metric(&mut out, "center_ratio", r.center_ratio);
        }
        Experiment::PulsedReflectivity => {
            let r = ex::pulsed_reflectivity(cfg)?;
            for (i, t) in r.traces.into_iter().enumerate() {
                out.tables.push(Table::new(
                    &format!("pulsed_reflectivity_{i}"),
                    vec![
                        Column::new("time", "ps", t.times),
                        Column::new("coupled", "photons", t.coupled),
                        Column::new("empty", "photons", t.empty),
                        Column::new("signal", "photons", t.signal),
                    ],
                ));
                metric(&mut out, &format!("power_{i}"), t.power);
                metric(&mut out, &format!("visibility_{i}"), t.visibility);
                if let Some(p) = t.period {
                    metric(&mut out, &format!("period_{i}"), p);
                }
                out.warnings.extend(t.warning);
            }
        }
        Experiment::PlDecay => {
            let r = ex::pl_decay(cfg)?;
            out.tables.push(Table::new(
                "pl_decay",
                vec![
                    Column::new("time", "ps", r.times),
                    Column::new("cavity_flux", FLUX, r.cavity_flux),
                    Column::new("dot_flux", FLUX, r.dot_flux),
                    Column::new("signal", FLUX, r.signal),
                ],
            ));
            metric(&mut out, "lifetime", r.fit.lifetime);
            metric(&mut out, "one_over_e", r.one_over_e);
        }
        Experiment::DetunedDrive => {
            let r = ex::detuned_drive(cfg)?;
            out.tables.push(Table::new(
                "detuned_drive",
                vec![
                    Column::new("time", "ps", r.times),
                    Column::new("cavity_flux", FLUX, r.cavity_flux),
                    Column::new("dot_flux", FLUX, r.dot_flux),
                ],
            ));
            metric(&mut out, "lifetime", r.fit.lifetime);
            metric(&mut out, "cavity_yield", r.cavity_yield);
            metric(&mut out, "dot_yield", r.dot_yield);
            if r.yield_ratio.is_finite() {
                metric(&mut out, "yield_ratio", r.yield_ratio);
            }
            if cfg.lifetime.target.is_some() {
                let f = ex::fit_gamma_d(cfg)?;
                metric(&mut out, "fitted_gamma_d", f.gamma_d);
                metric(&mut out, "fitted_gamma_d_over_g", f.gamma_d / cfg.params.g);
                metric(&mut out, "fitted_lifetime", f.lifetime);
                let (gd, life): (Vec<f64>, Vec<f64>) = f.evaluations.into_iter().unzip();
                out.tables.push(Table::new(
                    "gamma_d_fit",
                    vec![Column::new("gamma_d", RATE, gd), Column::new("lifetime", "ps", life)],
                ));
            }
        }
        Experiment::CrossFeeding => {
            let r = ex::cross_feeding(cfg)?;
            out.tables.push(Table::new(
                "cross_feeding",
                vec![
                    Column::new("laser_detuning", RATE, r.detuning),
                    Column::new("cavity_flux", FLUX, r.cavity_flux),
                    Column::new("dot_flux", FLUX, r.dot_flux),
                    Column::new("collected", FLUX, r.collected),
                ],
            ));
            metric(&mut out, "cavity_peak", r.cavity_peak);
            if let Some(w) = r.dot_line_fwhm {
                metric(&mut out, "dot_line_fwhm", w);
            }
        }
        Experiment::TemperatureSeries => {
            let r = ex::temperature_series(cfg)?;
            out.tables.push(Table::new(
                "temperature_series",
                vec![
                    Column::new("temperature", "K", r.temperature),
                    Column::new("delta", RATE, r.delta),
                    Column::new("gamma_d", RATE, r.gamma_d),
                    Column::new("cavity_flux", FLUX, r.cavity_flux),
                ],
            ));
        }
        Experiment::G2Cw => {
            let r = ex::g2_cw_run(cfg)?;
            out.tables.push(Table::new("g2_cw", vec![Column::new("tau", "ps", r.tau), Column::new("g2", "1", r.g2)]));
            metric(&mut out, "g2_zero", r.g2_zero);
            metric(&mut out, "g2_tail", r.g2_tail);
        }
        Experiment::G2Pulsed => {
            let r = ex::g2_pulsed(cfg)?.result;
            out.tables.push(Table::new(
                "g2_histogram",
                vec![
                    Column::new("delay", "ps", r.bin_centers),
                    Column::new("coincidences", "counts", r.counts.iter().map(|c| *c as f64).collect()),
                ],
            ));
            out.tables.push(Table::new(
                "g2_peaks",
                vec![Column::new("delay", "ps", r.peak_delays), Column::new("area", "counts", r.peak_areas)],
            ));
            metric(&mut out, "center_side_ratio", r.ratio);
            metric(&mut out, "counting_g2", r.counting_g2);
            metric(&mut out, "mean_photons_per_pulse", r.mean_photons_per_pulse);
            out.warnings.extend(r.warning);
        }
        Experiment::SpectraCompare => {
            let r = ex::spectra_compare(cfg)?;
            out.tables.push(Table::new(
                "spectra",
                vec![
                    Column::new("omega", RATE, r.analytic.omega),
                    Column::new("analytic_cavity", "ps", r.analytic.s_cav),
                    Column::new("analytic_dot", "ps", r.analytic.s_qd),
                    Column::new("numerical_cavity", "ps", r.numerical.s_cav),
                    Column::new("numerical_dot", "ps", r.numerical.s_qd),
                ],
            ));
            metric(&mut out, "relative_l2_cavity", r.l2_cav);
            metric(&mut out, "relative_l2_dot", r.l2_qd);
        }
        Experiment::SolverCrosscheck => {
            let r = ex::solver_crosscheck(cfg)?;
            out.tables.push(Table::new(
                "solver_crosscheck",
                vec![
                    Column::new("time", "ps", r.times),
                    Column::new("master", "photons", r.master),
                    Column::new("trajectory_mean", "photons", r.mcwf_mean),
                    Column::new("trajectory_stderr", "photons", r.mcwf_stderr),
                    Column::new("bound", "photons", r.bound),
                ],
            ));
            metric(&mut out, "violations", r.violations as f64);
            metric(&mut out, "worst_ratio", r.worst_ratio);
        }
    }
    Ok(out)
}

/// Runs `which`, writes its CSV tables and `<experiment>.json` into `out_dir`.
pub fn run_to_dir(cfg: &ExperimentConfig, which: Experiment, out_dir: &Path) -> Result<RunManifest, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let out = run_experiment(cfg, which)?;
    let elapsed = start.elapsed().as_secs_f64();
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    let mut outputs = Vec::new();
    for t in &out.tables {
        outputs.push(write_csv(out_dir, t)?);
    }
    let name = which.name();
    let sidecar = format!("{name}.json");
    outputs.push(sidecar.clone());
    if let Some((k, _)) = out.metrics.iter().find(|(_, v)| !v.is_finite()) {
        return Err(CliError::Io(format!("metric `{k}` is not finite")));
    }
    let manifest = RunManifest {
        experiment: name,
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash(cfg),
        master_seed: cfg.ensemble.master_seed,
        wall_clock_seconds: elapsed,
        outputs,
        metrics: out.metrics,
        warnings: out.warnings,
    };
    std::fs::write(out_dir.join(&sidecar), render_sidecar(&manifest, cfg))?;
    Ok(manifest)
}
