//! Emission spectra of the linearized (single-excitation) model and of the
//! full master equation via the quantum regression theorem.
//!
//! In the linear model the amplitudes obey
//!
//! ```text
//! d⟨a⟩/dt = A⟨a⟩ + g⟨σ⟩,   d⟨σ⟩/dt = B⟨σ⟩ − g⟨a⟩
//! A = −iΔ/2 − κ/2,          B = iΔ/2 − γ/2 − γ_d
//! ```
//!
//! with eigenvalues `λ± = [(A+B) ± √((A−B)² − 4g²)]/2`. An amplitude
//! `∝ e^{λt}` oscillates at the physical frequency `−Im λ` (fields evolve as
//! `e^{−iωt}`), so the spectral peaks sit at `ω = −Im λ±`.

use serde::{Deserialize, Serialize};

use crate::drive::{PulseKind, PulseShape};
use crate::dynamics::{check_grid, regression_trace, steady_state, SolverOptions};
use crate::error::{invalid, Error, Result};
use crate::generator::Generator;
use crate::hilbert::{DensityMatrix, PureState, SystemParams, C64};

/// Relative size of the discriminant below which the confluent limit is used.
pub const DEGENERACY_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearModelCoeffs {
    pub a: C64,
    pub b: C64,
    pub lambda_minus: C64,
    pub lambda_plus: C64,
    /// `√((A−B)² − 4g²)` on the branch with non-negative real part (and
    /// non-negative imaginary part when the real part vanishes).
    pub discriminant_root: C64,
    /// Discriminant is zero to within [`DEGENERACY_THRESHOLD`].
    pub degenerate: bool,
    pub g: f64,
}

impl LinearModelCoeffs {
    /// Emission frequencies `−Im λ±` (minus, plus).
    pub fn pole_frequencies(&self) -> (f64, f64) {
        (-self.lambda_minus.im, -self.lambda_plus.im)
    }

    /// Spectral FWHM `−2 Re λ±` (minus, plus).
    pub fn pole_widths(&self) -> (f64, f64) {
        (-2.0 * self.lambda_minus.re, -2.0 * self.lambda_plus.re)
    }

    /// Dressed-state splitting `|Im(λ₊ − λ₋)| = 2|Im λ₊|` at `Δ = 0`.
    pub fn splitting(&self) -> f64 {
        (self.lambda_plus.im - self.lambda_minus.im).abs()
    }
}

pub fn linear_coeffs(params: &SystemParams) -> Result<LinearModelCoeffs> {
    params.validate()?;
    let a = C64::new(-params.kappa / 2.0, -params.delta / 2.0);
    let b = C64::new(-params.gamma / 2.0 - params.gamma_d, params.delta / 2.0);
    let g = params.g;
    let disc = (a - b) * (a - b) - 4.0 * g * g;
    let mut root = disc.sqrt();
    if root.re < 0.0 || (root.re == 0.0 && root.im < 0.0) {
        root = -root;
    }
    let scale = (a - b).norm_sqr() + 4.0 * g * g;
    let degenerate = disc.norm() <= DEGENERACY_THRESHOLD * scale;
    Ok(LinearModelCoeffs {
        a,
        b,
        lambda_minus: (a + b - root) / 2.0,
        lambda_plus: (a + b + root) / 2.0,
        discriminant_root: root,
        degenerate,
        g,
    })
}

/// Which degree of freedom carries the initial excitation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpTarget {
    Dot,
    Cavity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSolutions {
    pub times: Vec<f64>,
    pub a: Vec<C64>,
    pub sigma: Vec<C64>,
    pub confluent: bool,
}

/// Closed-form `(⟨a⟩(t), ⟨σ⟩(t))` for a unit initial amplitude in the
/// pumped mode.
pub fn analytic_time_solutions(params: &SystemParams, target: PumpTarget, times: &[f64]) -> Result<TimeSolutions> {
    let c = linear_coeffs(params)?;
    let g = C64::new(c.g, 0.0);
    let (mut av, mut sv) = (Vec::with_capacity(times.len()), Vec::with_capacity(times.len()));
    for &t in times {
        let (a, s) = if c.degenerate {
            let lam = (c.a + c.b) / 2.0;
            let e = (lam * t).exp();
            match target {
                PumpTarget::Dot => (g * t * e, e * (1.0 + (c.b - lam) * t)),
                PumpTarget::Cavity => (e * (1.0 + (c.a - lam) * t), -g * t * e),
            }
        } else {
            let (lp, lm, r) = (c.lambda_plus, c.lambda_minus, c.discriminant_root);
            let (ep, em) = ((lp * t).exp(), (lm * t).exp());
            match target {
                PumpTarget::Dot => (g * (ep - em) / r, ((c.b - lm) * ep - (c.b - lp) * em) / r),
                PumpTarget::Cavity => (((c.a - lm) * ep - (c.a - lp) * em) / r, -g * (ep - em) / r),
            }
        };
        av.push(a);
        sv.push(s);
    }
    Ok(TimeSolutions {
        times: times.to_vec(),
        a: av,
        sigma: sv,
        confluent: c.degenerate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    /// Angular frequency relative to the mean of the QD and cavity
    /// frequencies, rad/ps.
    pub omega: Vec<f64>,
    /// Cavity emission, normalized to unit area on the grid (left at zero
    /// when there is no cavity emission).
    pub s_cav: Vec<f64>,
    pub s_qd: Vec<f64>,
    /// Areas before normalization.
    pub cav_area: f64,
    pub qd_area: f64,
    pub pump_target: Option<PumpTarget>,
    /// Peak positions `−Im λ±` and widths `−2 Re λ±` of the linear model.
    pub pole_frequencies: (f64, f64),
    pub pole_widths: (f64, f64),
}

pub(crate) fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])).sum()
}

fn normalize(omega: &[f64], s: &mut [f64]) -> f64 {
    let area = trapezoid(omega, s);
    if area > 0.0 {
        s.iter_mut().for_each(|v| *v /= area);
    }
    area
}

fn finish(
    omega: &[f64],
    mut s_cav: Vec<f64>,
    mut s_qd: Vec<f64>,
    pump_target: Option<PumpTarget>,
    coeffs: &LinearModelCoeffs,
) -> Result<SpectrumResult> {
    if s_cav.iter().chain(&s_qd).any(|v| !v.is_finite()) {
        return Err(Error::Analysis("non-finite spectral density".into()));
    }
    let cav_area = normalize(omega, &mut s_cav);
    let qd_area = normalize(omega, &mut s_qd);
    Ok(SpectrumResult {
        omega: omega.to_vec(),
        s_cav,
        s_qd,
        cav_area,
        qd_area,
        pump_target,
        pole_frequencies: coeffs.pole_frequencies(),
        pole_widths: coeffs.pole_widths(),
    })
}

/// `|∫₀^∞ e^{iωt} x(t) dt|²` for the linear-model amplitudes, written with
/// the characteristic polynomial `P(iω) = (iω+A)(iω+B) + g²`.
pub fn analytic_spectrum(params: &SystemParams, target: PumpTarget, omega: &[f64]) -> Result<SpectrumResult> {
    check_grid(omega, "omega_grid")?;
    let c = linear_coeffs(params)?;
    let g2 = c.g * c.g;
    let mut s_cav = Vec::with_capacity(omega.len());
    let mut s_qd = Vec::with_capacity(omega.len());
    for &w in omega {
        let x = C64::new(0.0, w);
        let p = (x + c.a) * (x + c.b) + g2;
        let den = p.norm_sqr();
        let (cav, qd) = match target {
            PumpTarget::Dot => (g2 / den, (x + c.a).norm_sqr() / den),
            PumpTarget::Cavity => ((x + c.b).norm_sqr() / den, g2 / den),
        };
        s_cav.push(cav);
        s_qd.push(qd);
    }
    finish(omega, s_cav, s_qd, Some(target), &c)
}

/// Source of a numerically computed spectrum.
#[derive(Debug, Clone, Copy)]
pub enum SpectrumSource<'a> {
    /// Single excitation seeded in the dot or the cavity: the spectrum is
    /// `|∫ e^{iωτ} Tr[c e^{Lτ}(c₀† ρ_g)] dτ|²`, which is the full-model
    /// counterpart of the linear amplitudes.
    Pump(PumpTarget),
    /// Spontaneous emission from an initial state:
    /// `Re ∫ e^{−iωτ} ⟨c†(τ)c(0)⟩ dτ`.
    Initial(&'a DensityMatrix),
    /// Incoherent part of the cw-driven emission:
    /// `Re ∫ e^{−iωτ} (⟨c†(τ)c(0)⟩ − |⟨c⟩|²) dτ`, reported relative to the
    /// reference frequency (not the laser).
    Cw(&'a PulseShape),
}

/// Correlator sampling used by [`numerical_spectrum`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub solver: SolverOptions,
    /// Delay step, ps. `None` picks one from the fastest rate.
    pub dtau: Option<f64>,
    /// Integration horizon, ps. `None` picks 25 slowest decay times.
    pub tau_max: Option<f64>,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            solver: SolverOptions::default(),
            dtau: None,
            tau_max: None,
        }
    }
}

/// One-sided Fourier integral `∫ e^{iωτ} f(τ) dτ` of a piecewise-linear
/// interpolant on a uniform grid (exact for each linear segment).
fn filon(f: &[C64], dtau: f64, omega: f64) -> C64 {
    let th = omega * dtau;
    // weights of f_k and f_{k+1} on one segment, relative to e^{iωτ_k}
    let (w0, w1) = if th.abs() < 1e-4 {
        let i = C64::new(0.0, 1.0);
        (
            C64::new(0.5, 0.0) + i * th / 6.0 - th * th / 24.0,
            C64::new(0.5, 0.0) + i * th / 3.0 - th * th / 8.0,
        )
    } else {
        let e = C64::new(th.cos(), th.sin());
        let i = C64::new(0.0, 1.0);
        let w1 = (e / (i * th)) + (e - 1.0) / (th * th);
        let w0 = (e - 1.0) / (i * th) - w1;
        (w0, w1)
    };
    let step = C64::new(th.cos(), th.sin());
    let mut phase = C64::new(1.0, 0.0);
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..f.len() - 1 {
        acc += phase * (w0 * f[k] + w1 * f[k + 1]);
        phase *= step;
    }
    acc * dtau
}

fn sampling(params: &SystemParams, omega: &[f64], opts: &SpectrumOptions) -> Result<(f64, usize)> {
    let c = linear_coeffs(params)?;
    let slow = [-c.lambda_minus.re, -c.lambda_plus.re, params.kappa / 2.0, params.gamma / 2.0 + params.gamma_d]
        .into_iter()
        .filter(|r| *r > 0.0)
        .fold(f64::INFINITY, f64::min);
    let fast = [c.lambda_minus.norm(), c.lambda_plus.norm(), params.delta.abs(), params.g, params.kappa]
        .into_iter()
        .chain(omega.iter().map(|w| w.abs()))
        .fold(0.0, f64::max);
    let tau_max = match opts.tau_max {
        Some(t) => t,
        None if slow.is_finite() => 25.0 / slow,
        None => return Err(Error::NoDamping),
    };
    let dtau = opts.dtau.unwrap_or_else(|| (0.05 / fast.max(1e-3)).min(1.0));
    if !(dtau > 0.0 && tau_max > dtau) {
        return Err(invalid("tau_max", "need 0 < dtau < tau_max"));
    }
    let n = (tau_max / dtau).ceil() as usize;
    if n > 5_000_000 {
        return Err(invalid("dtau", format!("{n} correlator samples requested")));
    }
    Ok((dtau, n))
}

fn check_decay(values: &[C64], what: &str) {
    let first = values[0].norm();
    let last = values[values.len() - 1].norm();
    if first > 0.0 && last > 1e-6 * first {
        log::warn!("{what} correlator decayed only to {:.2e} of its initial value", last / first);
    }
}

/// Spectrum from the full master equation.
pub fn numerical_spectrum(params: &SystemParams, source: SpectrumSource<'_>, omega: &[f64], opts: &SpectrumOptions) -> Result<SpectrumResult> {
    check_grid(omega, "omega_grid")?;
    opts.solver.validate()?;
    let coeffs = linear_coeffs(params)?;
    let (dtau, n) = sampling(params, omega, opts)?;
    let tau: Vec<f64> = (0..=n).map(|k| k as f64 * dtau).collect();

    match source {
        SpectrumSource::Pump(target) => {
            let gen = Generator::new(params, None)?;
            let ops = gen.operators();
            let ground = PureState::ground(params.n_max)?.to_density();
            let raise = match target {
                PumpTarget::Dot => ops.sigma.adjoint(),
                PumpTarget::Cavity => ops.a.adjoint(),
            };
            let x0 = raise.matrix() * ground.matrix();
            let ca = regression_trace(&gen, &x0, ops.a.matrix(), &tau, &opts.solver)?;
            let cs = regression_trace(&gen, &x0, ops.sigma.matrix(), &tau, &opts.solver)?;
            check_decay(&ca, "cavity");
            check_decay(&cs, "dot");
            let s_cav = omega.iter().map(|&w| filon(&ca, dtau, w).norm_sqr()).collect();
            let s_qd = omega.iter().map(|&w| filon(&cs, dtau, w).norm_sqr()).collect();
            finish(omega, s_cav, s_qd, Some(target), &coeffs)
        }
        SpectrumSource::Initial(rho) => {
            if rho.dim() != params.dim() {
                return Err(Error::DimensionMismatch {
                    expected: params.dim(),
                    found: rho.dim(),
                });
            }
            let gen = Generator::new(params, None)?;
            let (ca, cs) = emission_correlators(&gen, rho, &tau, &opts.solver)?;
            let s_cav = omega.iter().map(|&w| filon(&ca, dtau, -w).re.max(0.0)).collect();
            let s_qd = omega.iter().map(|&w| filon(&cs, dtau, -w).re.max(0.0)).collect();
            finish(omega, s_cav, s_qd, None, &coeffs)
        }
        SpectrumSource::Cw(pulse) => {
            if pulse.kind != PulseKind::Cw {
                return Err(invalid("drive", "cw spectrum needs a cw drive"));
            }
            let rho = steady_state(params, Some(pulse))?;
            let gen = Generator::new(params, Some(pulse))?;
            let ops = gen.operators();
            let mean_a = rho.expect(&ops.a);
            let mean_s = rho.expect(&ops.sigma);
            let (mut ca, mut cs) = emission_correlators(&gen, &rho, &tau, &opts.solver)?;
            ca.iter_mut().for_each(|v| *v -= mean_a.norm_sqr());
            cs.iter_mut().for_each(|v| *v -= mean_s.norm_sqr());
            check_decay(&ca, "cavity");
            // the rotating-frame frequency ω' corresponds to ω' + carrier
            let w_c = pulse.carrier_detuning;
            let s_cav = omega.iter().map(|&w| filon(&ca, dtau, -(w - w_c)).re.max(0.0)).collect();
            let s_qd = omega.iter().map(|&w| filon(&cs, dtau, -(w - w_c)).re.max(0.0)).collect();
            finish(omega, s_cav, s_qd, None, &coeffs)
        }
    }
}

fn emission_correlators(gen: &Generator, rho: &DensityMatrix, tau: &[f64], solver: &SolverOptions) -> Result<(Vec<C64>, Vec<C64>)> {
    let ops = gen.operators();
    let a = ops.a.matrix();
    let s = ops.sigma.matrix();
    let ca = regression_trace(gen, &(a * rho.matrix()), &a.adjoint(), tau, solver)?;
    let cs = regression_trace(gen, &(s * rho.matrix()), &s.adjoint(), tau, solver)?;
    Ok((ca, cs))
}

/// `‖a − b‖₂ / ‖b‖₂` with trapezoidal weights on `x`.
pub fn relative_l2(x: &[f64], a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != x.len() || b.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: a.len().min(b.len()),
        });
    }
    let diff: Vec<f64> = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).collect();
    let norm: Vec<f64> = b.iter().map(|q| q * q).collect();
    let den = trapezoid(x, &norm);
    if !(den > 0.0) {
        return Err(Error::VanishingSignal(den));
    }
    Ok((trapezoid(x, &diff) / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::find_peaks;
    use crate::ode::{integrate_on_grid, OdeOptions};
    use nalgebra::Matrix2;

    fn rates(g: f64, kappa: f64, gamma: f64, gamma_d: f64, delta: f64) -> SystemParams {
        SystemParams::new(g, kappa, gamma, gamma_d, delta, 2).unwrap()
    }

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    fn reference_params() -> SystemParams {
        rates(0.15708, 0.20474, 0.0076, 0.015708, 0.0)
    }

    #[test]
    fn decoupled_eigenvalues() {
        let c = linear_coeffs(&rates(0.0, 0.2, 0.01, 0.03, 0.7)).unwrap();
        let mut got = [c.lambda_minus, c.lambda_plus];
        let mut want = [c.a, c.b];
        got.sort_by(|x, y| x.re.total_cmp(&y.re));
        want.sort_by(|x, y| x.re.total_cmp(&y.re));
        assert!((got[0] - want[0]).norm() < 1e-15 && (got[1] - want[1]).norm() < 1e-15);
    }

    #[test]
    fn undamped_resonant_eigenvalues() {
        let c = linear_coeffs(&rates(0.157, 0.0, 0.0, 0.0, 0.0)).unwrap();
        assert!((c.lambda_plus - C64::new(0.0, 0.157)).norm() < 1e-15);
        assert!((c.lambda_minus - C64::new(0.0, -0.157)).norm() < 1e-15);
    }

    #[test]
    fn eigenvalues_match_dense_solver() {
        for delta in [0.0, -2.67, 0.4] {
            let p = reference_params().with_delta(delta);
            let c = linear_coeffs(&p).unwrap();
            let m = Matrix2::new(c.a, C64::new(p.g, 0.0), C64::new(-p.g, 0.0), c.b);
            // 2×2 characteristic polynomial solved independently
            let tr = m.trace();
            let det = m.determinant();
            let r = (tr * tr - 4.0 * det).sqrt();
            let mut dense = [(tr + r) / 2.0, (tr - r) / 2.0];
            let mut ours = [c.lambda_plus, c.lambda_minus];
            dense.sort_by(|x, y| x.im.total_cmp(&y.im));
            ours.sort_by(|x, y| x.im.total_cmp(&y.im));
            for (x, y) in dense.iter().zip(&ours) {
                assert!((x - y).norm() < 1e-12);
                // each is a root of det(M − λ)
                assert!(((m - Matrix2::identity() * *y).determinant()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn initial_conditions() {
        let p = reference_params();
        let d = analytic_time_solutions(&p, PumpTarget::Dot, &[0.0]).unwrap();
        assert!(d.a[0].norm() < 1e-15 && (d.sigma[0] - 1.0).norm() < 1e-15);
        let c = analytic_time_solutions(&p, PumpTarget::Cavity, &[0.0]).unwrap();
        assert!((c.a[0] - 1.0).norm() < 1e-15 && c.sigma[0].norm() < 1e-15);
    }

    fn ode_oracle(p: &SystemParams, target: PumpTarget, times: &[f64]) -> Vec<Vec<C64>> {
        let c = linear_coeffs(p).unwrap();
        let g = p.g;
        let y0 = match target {
            PumpTarget::Dot => [C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            PumpTarget::Cavity => [C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        };
        integrate_on_grid(
            |_, y, dy| {
                dy[0] = c.a * y[0] + g * y[1];
                dy[1] = c.b * y[1] - g * y[0];
            },
            0.0,
            &y0,
            times,
            OdeOptions { rtol: 1e-11, atol: 1e-13, ..Default::default() },
        )
        .unwrap()
    }

    #[test]
    fn time_solutions_match_ode() {
        let times = linspace(0.0, 500.0, 501);
        for target in [PumpTarget::Dot, PumpTarget::Cavity] {
            for delta in [0.0, -2.67] {
                let p = reference_params().with_delta(delta);
                let s = analytic_time_solutions(&p, target, &times).unwrap();
                let oracle = ode_oracle(&p, target, &times);
                for k in 0..times.len() {
                    assert!((s.a[k] - oracle[k][0]).norm() < 1e-8);
                    assert!((s.sigma[k] - oracle[k][1]).norm() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn confluent_limit_matches_ode() {
        // (A − B)² = 4g² at Δ = 0 when κ/2 − γ/2 − γ_d = 2g
        let g = 0.05;
        let p = rates(g, 0.2 + 0.02, 0.0, 0.0, 0.0).with_delta(0.0);
        let p = SystemParams { kappa: 4.0 * g + 0.02, gamma: 0.02, ..p };
        let c = linear_coeffs(&p).unwrap();
        assert!(c.degenerate);
        let times = linspace(0.0, 200.0, 201);
        for target in [PumpTarget::Dot, PumpTarget::Cavity] {
            let s = analytic_time_solutions(&p, target, &times).unwrap();
            assert!(s.confluent);
            let oracle = ode_oracle(&p, target, &times);
            for k in 0..times.len() {
                assert!(s.a[k].is_finite() && s.sigma[k].is_finite());
                assert!((s.a[k] - oracle[k][0]).norm() < 1e-8);
                assert!((s.sigma[k] - oracle[k][1]).norm() < 1e-8);
            }
        }
    }

    /// The pole-fraction form `C|1/(ω − ω₋) − 1/(ω − ω₊)|²` of the dot-pumped
    /// cavity spectrum, with the poles placed at `iλ±`.
    fn pole_form_cavity(p: &SystemParams, w: f64) -> f64 {
        let c = linear_coeffs(p).unwrap();
        let i = C64::new(0.0, 1.0);
        let (wm, wp) = (i * c.lambda_minus, i * c.lambda_plus);
        let d = c.discriminant_root * c.discriminant_root;
        p.g * p.g / d.norm() * (1.0 / (w - wm) - 1.0 / (w - wp)).norm_sqr()
    }

    #[test]
    fn polynomial_form_equals_pole_form() {
        let p = reference_params().with_delta(-0.8);
        let omega = linspace(-2.0, 2.0, 401);
        let s = analytic_spectrum(&p, PumpTarget::Dot, &omega).unwrap();
        // unnormalized comparison against the pole-fraction form
        let pole: Vec<f64> = omega.iter().map(|&w| pole_form_cavity(&p, w)).collect();
        for k in 0..omega.len() {
            let ours = s.s_cav[k] * s.cav_area;
            assert!((ours - pole[k]).abs() <= 1e-9 * pole[k].abs().max(1e-300), "w = {}", omega[k]);
        }
    }

    #[test]
    fn resonant_doublet_is_symmetric_and_split_by_2g() {
        let p = rates(0.15708, 0.02, 0.02, 0.0, 0.0);
        let omega = linspace(-0.5, 0.5, 2001);
        for target in [PumpTarget::Dot, PumpTarget::Cavity] {
            let s = analytic_spectrum(&p, target, &omega).unwrap();
            let n = omega.len();
            for k in 0..n {
                assert!((s.s_cav[k] - s.s_cav[n - 1 - k]).abs() <= 1e-10 * s.s_cav[k].max(1e-300));
                assert!(s.s_cav[k] >= 0.0 && s.s_qd[k] >= 0.0);
            }
            let peaks = find_peaks(&omega, &s.s_cav, 0.1);
            assert_eq!(peaks.len(), 2);
            let split = (peaks[1].0 - peaks[0].0).abs();
            assert!((split - 2.0 * p.g).abs() / (2.0 * p.g) < 0.01, "split {split}");
        }
    }

    #[test]
    fn peaks_sit_at_pole_frequencies() {
        // well-resolved lines, so that the tails of one pole do not pull the other
        let p = rates(0.15708, 0.01, 0.005, 0.0, 0.3);
        let c = linear_coeffs(&p).unwrap();
        let omega = linspace(-1.0, 1.0, 4001);
        let dw = omega[1] - omega[0];
        let s = analytic_spectrum(&p, PumpTarget::Cavity, &omega).unwrap();
        let peaks = find_peaks(&omega, &s.s_cav, 0.05);
        let (wm, wp) = c.pole_frequencies();
        for w in [wm, wp] {
            let nearest = peaks.iter().map(|pk| (pk.0 - w).abs()).fold(f64::INFINITY, f64::min);
            assert!(nearest <= dw, "pole at {w}, peaks {peaks:?}");
        }
    }

    #[test]
    fn no_cross_feeding_without_coupling() {
        let omega = linspace(-1.0, 1.0, 201);
        let s = analytic_spectrum(&reference_params().with_g(0.0), PumpTarget::Dot, &omega).unwrap();
        assert_eq!(s.cav_area, 0.0);
        let weak = analytic_spectrum(&reference_params().with_g(1e-4), PumpTarget::Dot, &omega).unwrap();
        assert!(weak.cav_area < 1e-5 * weak.qd_area);
    }

    #[test]
    fn detuned_dephased_dot_feeds_cavity_line() {
        // −1.17 nm at 920 nm: the cavity sits above the dot by ≈ 2.6 rad/ps
        let delta = -crate::units::detuning_from_wavelength_difference(1.17, 920.0);
        let p = reference_params().with_delta(-delta.abs()).with_gamma_d(0.1 * 0.15708);
        let omega = linspace(-3.0, 3.0, 6001);
        let s = analytic_spectrum(&p, PumpTarget::Dot, &omega).unwrap();
        let peaks = find_peaks(&omega, &s.s_cav, 1e-3);
        let cavity = p.delta / 2.0;
        assert!(peaks.iter().any(|pk| (pk.0 - cavity).abs() < 0.05), "{peaks:?}");
    }

    #[test]
    fn role_swap_symmetry() {
        // cavity-pumped S_cav equals dot-pumped S_QD after exchanging the
        // roles of (κ, a) and (γ + 2γ_d, σ)
        let p = rates(0.15708, 0.2, 0.01, 0.02, 0.6);
        let swapped = SystemParams {
            kappa: p.gamma + 2.0 * p.gamma_d,
            gamma: p.kappa,
            gamma_d: 0.0,
            delta: -p.delta,
            ..p
        };
        let omega = linspace(-1.5, 1.5, 601);
        let a = analytic_spectrum(&p, PumpTarget::Cavity, &omega).unwrap();
        let b = analytic_spectrum(&swapped, PumpTarget::Dot, &omega).unwrap();
        for k in 0..omega.len() {
            assert!((a.s_cav[k] - b.s_qd[k]).abs() <= 1e-10 * a.s_cav[k].max(1e-12));
        }
    }

    #[test]
    fn empty_cavity_lorentzian() {
        let kappa = 0.2;
        let p = SystemParams::new(0.0, kappa, 0.01, 0.0, 0.6, 2).unwrap();
        let rho0 = PureState::basis(2, false, 1).unwrap().to_density();
        let omega = linspace(-1.7, 2.3, 4001);
        let s = numerical_spectrum(&p, SpectrumSource::Initial(&rho0), &omega, &SpectrumOptions::default()).unwrap();
        let peaks = find_peaks(&omega, &s.s_cav, 0.5);
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].0 - 0.3).abs() < 1e-3);
        let half = peaks[0].1 / 2.0;
        let above: Vec<f64> = omega.iter().zip(&s.s_cav).filter(|(_, v)| **v >= half).map(|(w, _)| *w).collect();
        let fwhm = above[above.len() - 1] - above[0];
        assert!((fwhm - kappa).abs() / kappa < 0.01, "fwhm {fwhm}");
    }

    #[test]
    fn quantum_regression_matches_linear_model() {
        let omega = linspace(-1.0, 1.0, 801);
        for target in [PumpTarget::Dot, PumpTarget::Cavity] {
            for delta in [0.0, -0.5] {
                let p = reference_params().with_delta(delta);
                let a = analytic_spectrum(&p, target, &omega).unwrap();
                let n = numerical_spectrum(&p, SpectrumSource::Pump(target), &omega, &SpectrumOptions::default()).unwrap();
                let e_cav = relative_l2(&omega, &n.s_cav, &a.s_cav).unwrap();
                let e_qd = relative_l2(&omega, &n.s_qd, &a.s_qd).unwrap();
                assert!(e_cav < 0.05 && e_qd < 0.05, "{target:?} {delta}: {e_cav} {e_qd}");
                assert!(e_cav < 1e-3, "{e_cav}");
            }
        }
    }

    #[test]
    fn anticrossing_minimum_splitting() {
        let omega = linspace(-2.0, 2.0, 4001);
        let mut best = f64::INFINITY;
        for k in 0..21 {
            let delta = -1.0 + 0.1 * k as f64;
            let p = rates(0.15708, 0.05, 0.01, 0.0, delta);
            let s = analytic_spectrum(&p, PumpTarget::Dot, &omega).unwrap();
            let total: Vec<f64> = s.s_cav.iter().zip(&s.s_qd).map(|(a, b)| a + b).collect();
            let peaks = find_peaks(&omega, &total, 1e-3);
            assert!(peaks.len() >= 2, "delta {delta}");
            best = best.min((peaks[peaks.len() - 1].0 - peaks[0].0).abs());
        }
        assert!((best - 2.0 * 0.15708).abs() / (2.0 * 0.15708) < 0.02, "{best}");
    }

    proptest::proptest! {
        #[test]
        fn vieta_relations(g in 0.0f64..0.5, kappa in 0.0f64..0.5, gamma in 0.0f64..0.1, gamma_d in 0.0f64..0.1, delta in -5.0f64..5.0) {
            let c = linear_coeffs(&rates(g, kappa, gamma, gamma_d, delta)).unwrap();
            let scale = 1.0 + (c.a + c.b).norm_sqr();
            proptest::prop_assert!((c.lambda_minus + c.lambda_plus - c.a - c.b).norm() <= 1e-12 * scale.sqrt());
            proptest::prop_assert!((c.lambda_minus * c.lambda_plus - c.a * c.b - g * g).norm() <= 1e-12 * scale);
            proptest::prop_assert!(c.discriminant_root.re >= 0.0);
        }

        #[test]
        fn spectra_are_nonnegative(g in 0.0f64..0.5, kappa in 0.001f64..0.5, gamma in 0.0f64..0.1, gamma_d in 0.0f64..0.1, delta in -5.0f64..5.0) {
            let omega = linspace(-4.0, 4.0, 201);
            for target in [PumpTarget::Dot, PumpTarget::Cavity] {
                let s = analytic_spectrum(&rates(g, kappa, gamma, gamma_d, delta), target, &omega).unwrap();
                proptest::prop_assert!(s.s_cav.iter().chain(&s.s_qd).all(|v| v.is_finite() && *v >= 0.0));
            }
        }
    }
}
