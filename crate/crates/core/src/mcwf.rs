//! Quantum-jump (Monte Carlo wavefunction) unraveling of the master
//! equation.
//!
//! Between jumps the unnormalized state follows `−i H_eff ψ` with
//! `H_eff = H − (i/2) Σ c†c`. A jump happens when `‖ψ‖²` falls to a uniform
//! random threshold; the jump time is located by bisection on the dense
//! output of the integrator.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drive::PulseShape;
use crate::dynamics::{check_grid, SolverOptions};
use crate::error::{invalid, Error, Result};
use crate::generator::{Channel, Generator};
use crate::hilbert::{PureState, SystemParams, C64, TRUNCATION_THRESHOLD, ZERO};
use crate::ode::Stepper;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub channel: Channel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub master_seed: u64,
    pub index: u64,
    pub jumps: Vec<JumpEvent>,
    pub times: Vec<f64>,
    pub photon_number: Vec<f64>,
    pub excited: Vec<f64>,
    /// Population of the highest Fock level kept.
    pub top_fock: Vec<f64>,
    /// Normalized states on the grid, when requested.
    #[serde(skip)]
    pub states: Vec<PureState>,
    /// Time after which the trajectory was frozen because no excitation
    /// was left (see [`TrajectoryOptions::early_stop`]).
    pub stopped_at: Option<f64>,
}

impl TrajectoryRecord {
    pub fn count(&self, channel: Channel) -> usize {
        self.jumps.iter().filter(|j| j.channel == channel).count()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryOptions {
    pub solver: SolverOptions,
    /// Resolution of the jump-time bisection, ps.
    pub bisection_tol: f64,
    pub store_states: bool,
    /// Once the drive is over, stop integrating when `⟨a†a⟩ + ⟨σ†σ⟩`
    /// drops below this value.
    pub early_stop: Option<f64>,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        TrajectoryOptions {
            solver: SolverOptions::default(),
            bisection_tol: 1e-3,
            store_states: false,
            early_stop: None,
        }
    }
}

/// Counter-based stream: trajectory `index` of `master_seed`.
pub fn trajectory_rng(master_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw in (0, 1].
fn threshold(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

struct Diagonals {
    photons: Vec<f64>,
    excited: Vec<f64>,
    top: Vec<f64>,
}

impl Diagonals {
    fn new(n_max: usize) -> Self {
        let d = 2 * (n_max + 1);
        let photons = (0..d).map(|k| (k % (n_max + 1)) as f64).collect();
        let excited = (0..d).map(|k| if k > n_max { 1.0 } else { 0.0 }).collect();
        let top = (0..d).map(|k| if k % (n_max + 1) == n_max { 1.0 } else { 0.0 }).collect();
        Diagonals { photons, excited, top }
    }

    fn moments(&self, psi: &[C64]) -> (f64, f64, f64) {
        let norm = norm_sqr(psi);
        let (mut n, mut e, mut t) = (0.0, 0.0, 0.0);
        for (k, z) in psi.iter().enumerate() {
            let p = z.norm_sqr();
            n += self.photons[k] * p;
            e += self.excited[k] * p;
            t += self.top[k] * p;
        }
        (n / norm, e / norm, t / norm)
    }
}

struct Recorder<'a> {
    diag: &'a Diagonals,
    rec: TrajectoryRecord,
    store: bool,
}

impl Recorder<'_> {
    fn push(&mut self, psi: &[C64]) -> Result<()> {
        let (n, e, t) = self.diag.moments(psi);
        self.rec.photon_number.push(n);
        self.rec.excited.push(e);
        self.rec.top_fock.push(t);
        if self.store {
            self.rec.states.push(PureState::new(DVector::from_column_slice(psi))?);
        }
        Ok(())
    }
}

fn run_trajectory(
    gen: &Generator,
    psi0: &PureState,
    grid: &[f64],
    master_seed: u64,
    index: u64,
    opts: &TrajectoryOptions,
) -> Result<TrajectoryRecord> {
    let mut rng = trajectory_rng(master_seed, index);
    let diag = Diagonals::new(gen.params().n_max);
    let mut recorder = Recorder {
        diag: &diag,
        rec: TrajectoryRecord {
            master_seed,
            index,
            jumps: Vec::new(),
            times: grid.to_vec(),
            photon_number: Vec::with_capacity(grid.len()),
            excited: Vec::with_capacity(grid.len()),
            top_fock: Vec::with_capacity(grid.len()),
            states: Vec::new(),
            stopped_at: None,
        },
        store: opts.store_states,
    };
    let drive_end = match gen.drive() {
        None => Some(grid[0]),
        Some(p) => p.end_time(),
    };

    let dim = gen.dim();
    let mut rhs = |t: f64, y: &[C64], dy: &mut [C64]| gen.apply_effective(t, y, dy);
    let psi_start: Vec<C64> = psi0.amplitudes().iter().copied().collect();
    let mut stepper = Stepper::new(grid[0], &psi_start, opts.solver.ode(gen.max_step()));
    let t_end = grid[grid.len() - 1];
    let mut buf = vec![ZERO; dim];
    let mut scratch = vec![ZERO; dim];
    let mut weights = Vec::new();
    let mut r = threshold(&mut rng);

    recorder.push(&psi_start)?;
    let mut k = 1;
    while k < grid.len() {
        stepper.step(&mut rhs, t_end)?;
        let t_new = stepper.t();
        if norm_sqr(stepper.y()) <= r {
            let (mut lo, mut hi) = (stepper.t_prev(), t_new);
            while hi - lo > opts.bisection_tol {
                let mid = 0.5 * (lo + hi);
                stepper.interpolate(mid, &mut buf);
                if norm_sqr(&buf) > r {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let tj = hi;
            while k < grid.len() && grid[k] < tj {
                stepper.interpolate(grid[k], &mut buf);
                recorder.push(&buf)?;
                k += 1;
            }
            stepper.interpolate(tj, &mut buf);
            gen.jump_weights(&buf, &mut scratch, &mut weights);
            let total: f64 = weights.iter().sum();
            if !(total > 0.0) {
                return Err(Error::InvalidState(format!("no jump channel open at t = {tj} ps")));
            }
            let u = rng.random::<f64>() * total;
            let mut which = weights.len() - 1;
            let mut acc = 0.0;
            for (i, w) in weights.iter().enumerate() {
                acc += w;
                if u < acc {
                    which = i;
                    break;
                }
            }
            let jump = &gen.jumps[which];
            scratch.iter_mut().for_each(|z| *z = ZERO);
            jump.op.matvec_acc(C64::new(1.0, 0.0), &buf, &mut scratch);
            let norm = norm_sqr(&scratch).sqrt();
            scratch.iter_mut().for_each(|z| *z /= norm);
            recorder.rec.jumps.push(JumpEvent {
                time: tj,
                channel: jump.channel,
            });
            stepper.reset(tj, &scratch);
            r = threshold(&mut rng);
            continue;
        }
        while k < grid.len() && grid[k] <= t_new {
            if grid[k] == t_new {
                recorder.push(stepper.y())?;
            } else {
                stepper.interpolate(grid[k], &mut buf);
                recorder.push(&buf)?;
            }
            k += 1;
        }
        if let (Some(eps), Some(t_off)) = (opts.early_stop, drive_end) {
            if t_new >= t_off {
                let (n, e, _) = diag.moments(stepper.y());
                if n + e < eps {
                    recorder.rec.stopped_at = Some(t_new);
                    let y = stepper.y().to_vec();
                    while k < grid.len() {
                        recorder.push(&y)?;
                        k += 1;
                    }
                }
            }
        }
    }
    Ok(recorder.rec)
}

fn check_inputs(psi0: &PureState, grid: &[f64], params: &SystemParams, opts: &TrajectoryOptions) -> Result<()> {
    check_grid(grid, "t_grid")?;
    opts.solver.validate()?;
    if !(opts.bisection_tol > 0.0) {
        return Err(invalid("bisection_tol", "must be positive"));
    }
    if psi0.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            found: psi0.dim(),
        });
    }
    Ok(())
}

/// Single trajectory; `seed` selects stream 0 of that master seed, so it
/// equals trajectory 0 of [`ensemble_average`] with the same seed.
pub fn evolve_trajectory(
    psi0: &PureState,
    t_grid: &[f64],
    params: &SystemParams,
    drive: Option<&PulseShape>,
    seed: u64,
    opts: &TrajectoryOptions,
) -> Result<TrajectoryRecord> {
    check_inputs(psi0, t_grid, params, opts)?;
    let gen = Generator::new(params, drive)?;
    run_trajectory(&gen, psi0, t_grid, seed, 0, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub n_traj: usize,
    pub master_seed: u64,
    pub times: Vec<f64>,
    pub photon_mean: Vec<f64>,
    pub photon_stderr: Vec<f64>,
    pub excited_mean: Vec<f64>,
    pub excited_stderr: Vec<f64>,
    /// Number of jumps per trajectory, by channel.
    pub cavity_jumps: Vec<u32>,
    pub dot_jumps: Vec<u32>,
}

impl EnsembleResult {
    /// `⟨m(m−1)⟩ / ⟨m⟩²` of the per-trajectory jump count `m`.
    pub fn counting_g2(&self, channel: Channel) -> Result<f64> {
        let counts = match channel {
            Channel::Cavity => &self.cavity_jumps,
            Channel::Dot => &self.dot_jumps,
            Channel::Dephasing => return Err(invalid("channel", "dephasing jumps are not photons")),
        };
        counting_g2(counts)
    }
}

pub(crate) fn counting_g2(counts: &[u32]) -> Result<f64> {
    let n = counts.len() as f64;
    let m1: f64 = counts.iter().map(|&m| m as f64).sum::<f64>() / n;
    let m2: f64 = counts.iter().map(|&m| m as f64 * (m as f64 - 1.0)).sum::<f64>() / n;
    if m1 <= 0.0 {
        return Err(Error::VanishingSignal(m1));
    }
    Ok(m2 / (m1 * m1))
}

struct Partial {
    photon: Vec<f64>,
    excited: Vec<f64>,
    top: Vec<f64>,
    cavity: u32,
    dot: u32,
}

/// Runs `n_traj` trajectories (in parallel) and returns means and standard
/// errors. Trajectory `i` always uses stream `i` of `master_seed`, and the
/// reduction runs in index order, so the result does not depend on the
/// thread count.
pub fn ensemble_average(
    psi0: &PureState,
    t_grid: &[f64],
    params: &SystemParams,
    drive: Option<&PulseShape>,
    n_traj: usize,
    master_seed: u64,
    opts: &TrajectoryOptions,
) -> Result<EnsembleResult> {
    if n_traj == 0 {
        return Err(invalid("n_traj", "need at least one trajectory"));
    }
    check_inputs(psi0, t_grid, params, opts)?;
    let gen = Generator::new(params, drive)?;
    let opts = TrajectoryOptions {
        store_states: false,
        ..*opts
    };
    let partials: Vec<Result<Partial>> = (0..n_traj as u64)
        .into_par_iter()
        .map(|i| {
            run_trajectory(&gen, psi0, t_grid, master_seed, i, &opts)
                .map(|rec| Partial {
                    cavity: rec.count(Channel::Cavity) as u32,
                    dot: rec.count(Channel::Dot) as u32,
                    photon: rec.photon_number,
                    excited: rec.excited,
                    top: rec.top_fock,
                })
                .map_err(|e| Error::Trajectory {
                    index: i as usize,
                    source: Box::new(e),
                })
        })
        .collect();

    let m = t_grid.len();
    let (mut s_n, mut s_nn, mut s_e, mut s_ee, mut s_top) = (vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m], vec![0.0; m]);
    let mut cavity_jumps = Vec::with_capacity(n_traj);
    let mut dot_jumps = Vec::with_capacity(n_traj);
    for p in partials {
        let p = p?;
        for j in 0..m {
            s_n[j] += p.photon[j];
            s_nn[j] += p.photon[j] * p.photon[j];
            s_e[j] += p.excited[j];
            s_ee[j] += p.excited[j] * p.excited[j];
            s_top[j] += p.top[j];
        }
        cavity_jumps.push(p.cavity);
        dot_jumps.push(p.dot);
    }
    let nf = n_traj as f64;
    for (j, top) in s_top.iter().enumerate() {
        let population = top / nf;
        if population > TRUNCATION_THRESHOLD {
            log::warn!("top Fock population {population:e} at t = {} ps", t_grid[j]);
            return Err(Error::TruncationOverflow {
                population,
                threshold: TRUNCATION_THRESHOLD,
                n_max: params.n_max,
            });
        }
    }
    let stats = |s: &[f64], ss: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let mean: Vec<f64> = s.iter().map(|v| v / nf).collect();
        let err = s
            .iter()
            .zip(ss)
            .map(|(a, b)| {
                if n_traj < 2 {
                    0.0
                } else {
                    let mu = a / nf;
                    let var = ((b - nf * mu * mu) / (nf - 1.0)).max(0.0);
                    (var / nf).sqrt()
                }
            })
            .collect();
        (mean, err)
    };
    let (photon_mean, photon_stderr) = stats(&s_n, &s_nn);
    let (excited_mean, excited_stderr) = stats(&s_e, &s_ee);
    Ok(EnsembleResult {
        n_traj,
        master_seed,
        times: t_grid.to_vec(),
        photon_mean,
        photon_stderr,
        excited_mean,
        excited_stderr,
        cavity_jumps,
        dot_jumps,
    })
}

/// Settings of a simulated pulsed Hanbury Brown–Twiss measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulsedG2Options {
    /// Laser repetition period, ps.
    pub rep_period: f64,
    pub n_pulses: usize,
    /// Standard deviation of the Gaussian detector timing jitter, ps.
    pub jitter_sigma: f64,
    /// Number of side peaks on each side of zero delay.
    pub n_side: usize,
    /// Simulated time per pulse, ps (from t = 0).
    pub window: f64,
    /// Histogram bin width, ps.
    pub bin_width: f64,
    /// Which decay channel is detected.
    pub channel: Channel,
    pub master_seed: u64,
    pub trajectory: TrajectoryOptions,
}

impl PulsedG2Options {
    pub fn validate(&self, pulse: &PulseShape) -> Result<()> {
        if self.n_pulses < 2 {
            return Err(invalid("g2.n_pulses", "need at least two pulses"));
        }
        if self.n_side == 0 || self.n_side >= self.n_pulses {
            return Err(invalid("g2.n_side", "need 1 <= n_side < n_pulses"));
        }
        if !(self.window > 0.0 && self.rep_period >= self.window) {
            return Err(invalid("g2.window", "need 0 < window <= rep_period"));
        }
        if let Some(end) = pulse.end_time() {
            if end > self.window {
                return Err(invalid("g2.window", "the pulse does not fit into the simulated window"));
            }
        } else {
            return Err(invalid("pulse", "pulsed g2 needs a gaussian pulse"));
        }
        if !(self.jitter_sigma >= 0.0 && self.bin_width > 0.0) {
            return Err(invalid("g2.bin_width", "need jitter >= 0 and bin width > 0"));
        }
        if self.channel == Channel::Dephasing {
            return Err(invalid("g2.channel", "dephasing jumps are not photons"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulsedG2Result {
    pub bin_centers: Vec<f64>,
    pub counts: Vec<u64>,
    /// Delay `k·T` of each coincidence peak, `k = −n_side..=n_side`.
    pub peak_delays: Vec<f64>,
    /// Coincidences per peak, corrected for the finite number of pulse
    /// pairs at each lag.
    pub peak_areas: Vec<f64>,
    pub center_area: f64,
    pub side_mean: f64,
    /// Center peak area over the mean side-peak area.
    pub ratio: f64,
    pub photons_detected: usize,
    pub mean_photons_per_pulse: f64,
    /// `⟨m(m−1)⟩/⟨m⟩²` of the photon number per pulse.
    pub counting_g2: f64,
    pub warning: Option<String>,
}

/// Simulates `n_pulses` independent excitation cycles and histograms all
/// pairwise delays between detected photons.
pub fn pulsed_g2_histogram(params: &SystemParams, pulse: &PulseShape, opts: &PulsedG2Options) -> Result<PulsedG2Result> {
    opts.validate(pulse)?;
    let gen = Generator::new(params, Some(pulse))?;
    let psi0 = PureState::ground(params.n_max)?;
    let grid = [0.0, opts.window];
    let topts = TrajectoryOptions {
        store_states: false,
        early_stop: opts.trajectory.early_stop.or(Some(1e-8)),
        ..opts.trajectory
    };
    let channel = opts.channel;
    let per_pulse: Vec<Result<(Vec<f64>, f64)>> = (0..opts.n_pulses as u64)
        .into_par_iter()
        .map(|k| {
            let rec = run_trajectory(&gen, &psi0, &grid, opts.master_seed, k, &topts).map_err(|e| Error::Trajectory {
                index: k as usize,
                source: Box::new(e),
            })?;
            let top = rec.top_fock.iter().copied().fold(0.0, f64::max);
            let mut jitter_rng = trajectory_rng(opts.master_seed ^ 0x5eed_0f_de7ec7, k);
            let normal = Normal::new(0.0, opts.jitter_sigma).map_err(|e| invalid("g2.jitter", e.to_string()))?;
            let base = k as f64 * opts.rep_period;
            let times = rec
                .jumps
                .iter()
                .filter(|j| j.channel == channel)
                .map(|j| base + j.time + normal.sample(&mut jitter_rng))
                .collect();
            Ok((times, top))
        })
        .collect();

    let mut events = Vec::new();
    let mut counts_per_pulse = Vec::with_capacity(opts.n_pulses);
    for r in per_pulse {
        let (times, top) = r?;
        if top > TRUNCATION_THRESHOLD {
            return Err(Error::TruncationOverflow {
                population: top,
                threshold: TRUNCATION_THRESHOLD,
                n_max: params.n_max,
            });
        }
        counts_per_pulse.push(times.len() as u32);
        events.extend(times);
    }
    events.sort_by(f64::total_cmp);
    let mean_photons = events.len() as f64 / opts.n_pulses as f64;
    let warning = if mean_photons > 0.1 {
        let msg = format!("{mean_photons:.3} photons per pulse: pile-up regime beyond the model");
        log::warn!("{msg}");
        Some(msg)
    } else {
        None
    };

    let t = opts.rep_period;
    let half_span = (opts.n_side as f64 + 0.5) * t;
    let n_bins = (2.0 * half_span / opts.bin_width).ceil() as usize;
    let mut counts = vec![0u64; n_bins];
    let n_peaks = 2 * opts.n_side + 1;
    let mut raw_peaks = vec![0u64; n_peaks];
    let mut add = |d: f64| {
        let b = ((d + half_span) / opts.bin_width).floor();
        if b >= 0.0 && (b as usize) < n_bins {
            counts[b as usize] += 1;
        }
        let p = (d / t).round() as i64 + opts.n_side as i64;
        if p >= 0 && (p as usize) < n_peaks {
            raw_peaks[p as usize] += 1;
        }
    };
    for i in 0..events.len() {
        for j in (i + 1)..events.len() {
            let d = events[j] - events[i];
            if d >= half_span {
                break;
            }
            add(d);
            add(-d);
        }
    }
    let peak_delays: Vec<f64> = (0..n_peaks).map(|p| (p as f64 - opts.n_side as f64) * t).collect();
    let n = opts.n_pulses as f64;
    let peak_areas: Vec<f64> = raw_peaks
        .iter()
        .enumerate()
        .map(|(p, &c)| {
            let lag = (p as f64 - opts.n_side as f64).abs();
            c as f64 * n / (n - lag)
        })
        .collect();
    let center_area = peak_areas[opts.n_side];
    let side_mean = peak_areas
        .iter()
        .enumerate()
        .filter(|(p, _)| *p != opts.n_side)
        .map(|(_, a)| a)
        .sum::<f64>()
        / (2 * opts.n_side) as f64;
    if side_mean <= 0.0 {
        return Err(Error::VanishingSignal(mean_photons));
    }
    let bin_centers = (0..n_bins).map(|b| -half_span + (b as f64 + 0.5) * opts.bin_width).collect();
    Ok(PulsedG2Result {
        bin_centers,
        counts,
        peak_delays,
        peak_areas,
        center_area,
        side_mean,
        ratio: center_area / side_mean,
        photons_detected: events.len(),
        mean_photons_per_pulse: mean_photons,
        counting_g2: counting_g2(&counts_per_pulse)?,
        warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::DriveTarget;
    use crate::dynamics::evolve_master;

    fn grid(t_end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
    }

    fn rates(g: f64, kappa: f64, gamma: f64, gamma_d: f64, delta: f64, n_max: usize) -> SystemParams {
        SystemParams::new(g, kappa, gamma, gamma_d, delta, n_max).unwrap()
    }

    #[test]
    fn no_loss_means_no_jumps() {
        let p = rates(0.157, 0.0, 0.0, 0.0, 0.0, 2);
        let psi0 = PureState::basis(2, true, 0).unwrap();
        let rec = evolve_trajectory(&psi0, &grid(100.0, 50), &p, None, 7, &TrajectoryOptions::default()).unwrap();
        assert!(rec.jumps.is_empty());
        for (t, n) in rec.times.iter().zip(&rec.photon_number) {
            assert!((n - (0.157 * t).sin().powi(2)).abs() < 1e-7);
        }
    }

    #[test]
    fn single_excitation_emits_exactly_once() {
        let p = rates(0.157, 0.2, 0.01, 0.0, 0.3, 2);
        let psi0 = PureState::basis(2, true, 0).unwrap();
        for seed in 0..40 {
            let rec = evolve_trajectory(&psi0, &grid(3000.0, 10), &p, None, seed, &TrajectoryOptions::default()).unwrap();
            let photons = rec.count(Channel::Cavity) + rec.count(Channel::Dot);
            assert_eq!(photons, 1, "seed {seed}");
        }
    }

    #[test]
    fn identical_seeds_are_bit_identical() {
        let p = rates(0.157, 0.2, 0.01, 0.02, -0.5, 3);
        let drive = PulseShape::gaussian(0.05, 30.0, 20.0, 0.0, DriveTarget::Cavity);
        let psi0 = PureState::ground(3).unwrap();
        let opts = TrajectoryOptions { store_states: true, ..Default::default() };
        let a = evolve_trajectory(&psi0, &grid(200.0, 100), &p, Some(&drive), 99, &opts).unwrap();
        let b = evolve_trajectory(&psi0, &grid(200.0, 100), &p, Some(&drive), 99, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.states, b.states);
        for s in &a.states {
            assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
        }
        assert!(a.jumps.windows(2).all(|w| w[1].time > w[0].time));
    }

    #[test]
    fn one_trajectory_ensemble_equals_trajectory() {
        let p = rates(0.157, 0.2, 0.01, 0.02, 0.0, 2);
        let psi0 = PureState::basis(2, true, 0).unwrap();
        let t = grid(100.0, 40);
        let rec = evolve_trajectory(&psi0, &t, &p, None, 5, &TrajectoryOptions::default()).unwrap();
        let ens = ensemble_average(&psi0, &t, &p, None, 1, 5, &TrajectoryOptions::default()).unwrap();
        assert_eq!(ens.photon_mean, rec.photon_number);
        assert!(ens.photon_stderr.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn ensemble_matches_master_equation() {
        let p = rates(0.157, 0.2047, 0.0076, 0.0157, 0.0, 3);
        let drive = PulseShape::gaussian(0.015, 60.0, 40.0, 0.0, DriveTarget::Cavity);
        let t = grid(300.0, 60);
        let ens = ensemble_average(&PureState::ground(3).unwrap(), &t, &p, Some(&drive), 600, 11, &TrajectoryOptions::default())
            .unwrap();
        let rho0 = crate::hilbert::DensityMatrix::ground(3).unwrap();
        let me = evolve_master(&rho0, &t, &p, Some(&drive), &SolverOptions::default()).unwrap();
        let floor = 1e-6 * me.photon_number.iter().copied().fold(0.0, f64::max);
        for j in 0..t.len() {
            let dev = (ens.photon_mean[j] - me.photon_number[j]).abs();
            assert!(dev <= 3.0 * ens.photon_stderr[j] + floor, "t = {}: {} vs {}", t[j], ens.photon_mean[j], me.photon_number[j]);
        }
    }

    #[test]
    fn ensemble_is_thread_count_independent() {
        let p = rates(0.157, 0.2, 0.01, 0.02, 0.0, 2);
        let psi0 = PureState::basis(2, true, 0).unwrap();
        let t = grid(80.0, 20);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| ensemble_average(&psi0, &t, &p, None, 50, 3, &TrajectoryOptions::default()).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn coherent_pulse_into_empty_cavity_is_poissonian() {
        let p = rates(0.0, 0.2, 0.0, 0.0, 0.0, 3);
        let pulse = PulseShape::gaussian(0.006, 40.0, 20.0, 0.0, DriveTarget::Cavity);
        let opts = PulsedG2Options {
            rep_period: 1000.0,
            n_pulses: 60_000,
            jitter_sigma: 10.0,
            n_side: 3,
            window: 200.0,
            bin_width: 50.0,
            channel: Channel::Cavity,
            master_seed: 1,
            trajectory: TrajectoryOptions { solver: SolverOptions { rtol: 1e-6, ..Default::default() }, ..Default::default() },
        };
        let r = pulsed_g2_histogram(&p, &pulse, &opts).unwrap();
        // relative error of a peak with N coincidences is about 1/sqrt(N)
        let sigma = (1.0 / r.center_area + 1.0 / (r.side_mean * 6.0)).sqrt();
        assert!((r.ratio - 1.0).abs() < 4.0 * sigma, "ratio {} +- {}", r.ratio, sigma);
        assert!(r.warning.is_none());
    }

    #[test]
    fn two_level_emitter_gives_no_zero_delay_coincidences() {
        // π pulse on a bare emitter; only the dot channel radiates
        let p = rates(0.0, 0.2, 0.1, 0.0, 0.0, 1);
        let fwhm = 4.0;
        let sigma = fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
        let area = std::f64::consts::PI / 2.0;
        let amp = area / (sigma * (2.0 * std::f64::consts::PI).sqrt());
        let pulse = PulseShape::gaussian(amp, 15.0, fwhm, 0.0, DriveTarget::Dot);
        let opts = PulsedG2Options {
            rep_period: 500.0,
            n_pulses: 3000,
            jitter_sigma: 0.0,
            n_side: 2,
            window: 300.0,
            bin_width: 10.0,
            channel: Channel::Dot,
            master_seed: 4,
            trajectory: TrajectoryOptions::default(),
        };
        let r = pulsed_g2_histogram(&p, &pulse, &opts).unwrap();
        assert!(r.mean_photons_per_pulse > 0.9);
        // re-excitation during a 4-ps pulse with 10-ps lifetime is rare
        assert!(r.ratio < 0.1, "ratio {}", r.ratio);
        assert!(r.warning.is_some());
    }

    #[test]
    fn counting_g2_of_fixed_counts() {
        assert_eq!(counting_g2(&[1, 1, 1, 1]).unwrap(), 0.0);
        assert!((counting_g2(&[0, 2]).unwrap() - 1.0).abs() < 1e-15);
        assert!((counting_g2(&[0, 0, 3]).unwrap() - 2.0 / 1.0).abs() < 1e-15);
        assert!(counting_g2(&[0, 0]).is_err());
    }
}
