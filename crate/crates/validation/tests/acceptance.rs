//! Acceptance criteria AC1-AC8 against the bundled presets.
//!
//! Prints one PASS/FAIL line per criterion and exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cqed::experiments::{self as ex, ExperimentConfig, Transition};
use cqed::spectra::linear_coeffs;
use cqed::{DriveTarget, Error};
use cqed_cli::presets;

struct Outcome {
    pass: bool,
    detail: String,
}

fn preset(name: &str) -> ExperimentConfig {
    presets::load(name).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x - target).abs() <= rel * target.abs()
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Result<Outcome, Error>) -> Outcome {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    match out {
        Ok(mut o) => {
            if let Some(l) = limit {
                if elapsed > l {
                    o.pass = false;
                    o.detail.push_str(&format!("; over the {:.0} s budget", l.as_secs_f64()));
                }
            }
            o.detail.push_str(&format!("; {:.1} s", elapsed.as_secs_f64()));
            o
        }
        Err(e) => Outcome {
            pass: false,
            detail: format!("error: {e}"),
        },
    }
}

fn ac1() -> Result<Outcome, Error> {
    let cfg = preset("fig1f_reflectivity");
    let r = ex::reflectivity_scan(&cfg)?;
    let c = linear_coeffs(&cfg.params)?;
    let expected = 2.0 * c.lambda_plus.im.abs();
    let Some(sep) = r.peak_separation else {
        return Ok(Outcome {
            pass: false,
            detail: "no doublet resolved".into(),
        });
    };
    let rel = (sep - expected).abs() / expected;
    Ok(Outcome {
        pass: rel <= 0.02 && r.center_ratio < 0.30,
        detail: format!(
            "peak separation {sep:.4} rad/ps vs 2 Im λ+ {expected:.4} ({:.1}% off, limit 2%); center/peak {:.3} (limit 0.30)",
            100.0 * rel,
            r.center_ratio
        ),
    })
}

fn ac2() -> Result<Outcome, Error> {
    let cfg = preset("fig2_rabi");
    let r = ex::pulsed_reflectivity(&cfg)?;
    let target = 2.0 * std::f64::consts::PI / cfg.params.g;
    let lowest = r
        .traces
        .iter()
        .min_by(|a, b| a.power.total_cmp(&b.power))
        .expect("preset has powers");
    let period_ok = lowest.period.is_some_and(|p| within(p, target, 0.05));
    let mut by_power: Vec<_> = r.traces.iter().collect();
    by_power.sort_by(|a, b| a.power.total_cmp(&b.power));
    let vis: Vec<f64> = by_power.iter().map(|t| t.visibility).collect();
    let monotone = vis.windows(2).all(|w| w[1] < w[0]);
    Ok(Outcome {
        pass: period_ok && monotone,
        detail: format!(
            "period at {} nW: {} (target {target:.1} ps ±5%); visibility {:?} (must decrease)",
            lowest.power,
            lowest.period.map_or("none".to_string(), |p| format!("{p:.1} ps")),
            vis.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>()
        ),
    })
}

fn ac3() -> Result<Outcome, Error> {
    let r = ex::pl_decay(&preset("fig1g_pl"))?;
    Ok(Outcome {
        pass: within(r.fit.lifetime, 17.0, 0.20),
        detail: format!(
            "tail lifetime {:.2} ps (target 17 ps ±20%); 1/e time {:.2} ps",
            r.fit.lifetime, r.one_over_e
        ),
    })
}

fn ac4() -> Result<Outcome, Error> {
    let cfg = preset("fig4d_lifetime");
    let d = ex::detuned_drive(&cfg)?;
    let mut fit_cfg = cfg.clone();
    fit_cfg.lifetime.target = Some(118.0);
    let f = ex::fit_gamma_d(&fit_cfg)?;
    let ratio = f.gamma_d / cfg.params.g;
    Ok(Outcome {
        pass: within(d.fit.lifetime, 118.0, 0.25) && (ratio - 0.10).abs() <= 0.02,
        detail: format!(
            "lifetime {:.2} ps (target 118 ps ±25%); recovered γ_d/g {ratio:.4} (target 0.10 ±0.02)",
            d.fit.lifetime
        ),
    })
}

fn ac5() -> Result<Outcome, Error> {
    let mut pass = true;
    let mut parts = Vec::new();
    for name in presets::NAMES {
        let mut cfg = preset(name);
        cfg.ensemble.n_traj = 1000;
        let c = ex::solver_crosscheck(&cfg)?;
        let s = ex::spectra_compare(&cfg)?;
        pass &= c.violations == 0 && s.l2_cav <= 0.05 && s.l2_qd <= 0.05;
        parts.push(format!(
            "{name}: {} points outside 3 SE (worst {:.2}), spectra L2 {:.1e}/{:.1e}",
            c.violations, c.worst_ratio, s.l2_cav, s.l2_qd
        ));
    }
    Ok(Outcome {
        pass,
        detail: parts.join("; "),
    })
}

fn ac6() -> Result<Outcome, Error> {
    let mut bad = Vec::new();
    let pl = ex::pl_decay(&preset("fig1g_pl"))?;
    if !pl.worst.is_valid() {
        bad.push(format!("fig1g_pl {:?}", pl.worst));
    }
    for t in ex::pulsed_reflectivity(&preset("fig2_rabi"))?.traces {
        if !t.worst.is_valid() {
            bad.push(format!("fig2_rabi {:?}", t.worst));
        }
    }
    let d = ex::detuned_drive(&preset("fig4d_lifetime"))?;
    if !d.worst.is_valid() {
        bad.push(format!("fig4d_lifetime {:?}", d.worst));
    }
    // steady-state presets fail with an error on an invalid state
    ex::reflectivity_scan(&preset("fig1f_reflectivity"))?;
    ex::cross_feeding(&preset("fig3_crossfeed"))?;
    ex::temperature_series(&preset("fig3h_temperature"))?;

    let cfg = preset("fig4_g2");
    let cw = ex::g2_cw_run(&cfg)?;
    let tail_ok = (cw.g2_tail - 1.0).abs() <= 0.01;

    let mut empty = cfg.clone();
    empty.params.g = 0.0;
    empty.pulse.target = DriveTarget::Cavity;
    empty.pulse.carrier_detuning = ex::cavity_resonance(&empty.params);
    let e = ex::g2_cw_run(&empty)?;
    let coherent_dev = e.g2.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);

    Ok(Outcome {
        pass: bad.is_empty() && tail_ok && coherent_dev <= 1e-6,
        detail: format!(
            "invalid checkpoints: {}; cw g²(τ_max) {:.6} (1 ±1%); empty-cavity coherent max|g²−1| {coherent_dev:.1e} (limit 1e-6)",
            if bad.is_empty() { "none".to_string() } else { bad.join(", ") },
            cw.g2_tail
        ),
    })
}

fn ac7() -> Result<Outcome, Error> {
    let cfg = preset("fig4_g2");
    let p = ex::g2_pulsed(&cfg)?.result;
    let cw = ex::g2_cw_run(&cfg)?;
    Ok(Outcome {
        pass: p.ratio < 0.5 && cw.g2_zero < 0.5,
        detail: format!(
            "pulsed center/side {:.3} (limit 0.5, {:.3} photons/pulse); cw g²(0) {:.4} (limit 0.5)",
            p.ratio, p.mean_photons_per_pulse, cw.g2_zero
        ),
    })
}

fn ac8() -> Result<Outcome, Error> {
    let mut cfg = preset("fig4_g2");
    cfg.transition = Transition::Biexciton;
    let rejected = matches!(cfg.validate(), Err(Error::Unsupported(_)));
    Ok(Outcome {
        pass: rejected,
        detail: format!(
            "biexciton driving {}; absolute count rates, the temperature data/theory gap and spectrometer-limited linewidths are not modelled",
            if rejected { "rejected as unsupported" } else { "NOT rejected" }
        ),
    })
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let secs = |s| Some(Duration::from_secs(s));
    let criteria: [(&str, Option<Duration>, fn() -> Result<Outcome, Error>); 8] = [
        ("AC1 vacuum Rabi doublet", secs(10), ac1),
        ("AC2 time-domain Rabi period", secs(30), ac2),
        ("AC3 resonant PL lifetime", secs(10), ac3),
        ("AC4 detuned lifetime and dephasing fit", secs(120), ac4),
        ("AC5 solver cross-validation", secs(300), ac5),
        ("AC6 state validity", None, ac6),
        ("AC7 antibunching", secs(300), ac7),
        ("AC8 exclusions", None, ac8),
    ];
    let mut failed = 0;
    for (name, limit, f) in criteria {
        let o = timed(limit, f);
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
