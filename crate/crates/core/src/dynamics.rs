//! Master-equation evolution, steady states and two-time correlators.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::drive::{PulseKind, PulseShape};
use crate::error::{invalid, Error, Result};
use crate::generator::{Generator, SparseOp};
use crate::hilbert::{inf_norm, DensityMatrix, Operator, StateDiagnostics, SystemParams, C64, ZERO};
use crate::ode::{OdeOptions, Stepper};

/// Tolerances shared by the deterministic and stochastic solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rtol: 1e-8,
            atol: 1e-12,
            max_steps: 5_000_000,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(invalid("solver.rtol", format!("must lie in (0, 1), got {}", self.rtol)));
        }
        if !(self.atol > 0.0 && self.atol.is_finite()) {
            return Err(invalid("solver.atol", "must be positive"));
        }
        if self.max_steps == 0 {
            return Err(invalid("solver.max_steps", "must be positive"));
        }
        Ok(())
    }

    pub(crate) fn ode(&self, h_max: f64) -> OdeOptions {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            h_max,
            max_steps: self.max_steps,
        }
    }
}

/// Real observable sampled on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub label: String,
    pub unit: String,
    pub params: SystemParams,
}

impl TimeTrace {
    pub fn new(
        times: Vec<f64>,
        values: Vec<f64>,
        label: impl Into<String>,
        unit: impl Into<String>,
        params: SystemParams,
    ) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                found: values.len(),
            });
        }
        check_grid(&times, "times")?;
        Ok(TimeTrace {
            times,
            values,
            label: label.into(),
            unit: unit.into(),
            params,
        })
    }
}

/// Observables recorded by [`evolve_master`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `⟨a†a⟩`
    PhotonNumber,
    /// `⟨σ†σ⟩`
    Excited,
    /// `|⟨a⟩|²`
    CoherentIntensity,
}

impl Observable {
    pub fn label(&self) -> &'static str {
        match self {
            Observable::PhotonNumber => "photon_number",
            Observable::Excited => "excited_population",
            Observable::CoherentIntensity => "coherent_intensity",
        }
    }
}

/// Density-matrix checkpoints and observables on a time grid.
#[derive(Debug, Clone)]
pub struct MasterEvolution {
    pub params: SystemParams,
    pub times: Vec<f64>,
    pub photon_number: Vec<f64>,
    pub excited: Vec<f64>,
    /// `⟨a⟩` in the rotating frame.
    pub cavity_field: Vec<C64>,
    pub states: Vec<DensityMatrix>,
    /// Worst trace error, Hermiticity error and minimum eigenvalue seen.
    pub worst: StateDiagnostics,
}

impl MasterEvolution {
    pub fn values(&self, obs: Observable) -> Vec<f64> {
        match obs {
            Observable::PhotonNumber => self.photon_number.clone(),
            Observable::Excited => self.excited.clone(),
            Observable::CoherentIntensity => self.cavity_field.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    pub fn trace(&self, obs: Observable) -> TimeTrace {
        TimeTrace {
            times: self.times.clone(),
            values: self.values(obs),
            label: obs.label().to_string(),
            unit: "1".to_string(),
            params: self.params,
        }
    }
}

pub(crate) fn check_grid(grid: &[f64], name: &'static str) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid(name, "grid is empty"));
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(invalid(name, "grid contains non-finite values"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(name, "grid must be strictly increasing"));
    }
    Ok(())
}

/// `Tr[O X]` for a row-major `X`.
pub(crate) fn trace_with(op: &SparseOp, d: usize, x: &[C64]) -> C64 {
    op.entries.iter().fold(ZERO, |acc, &(r, c, v)| acc + v * x[c * d + r])
}

/// Integrates `dX/dt = L(t)[X]` from `t0` and calls `visit` at each grid
/// time with the row-major state.
pub(crate) fn propagate<F>(gen: &Generator, t0: f64, x0: &[C64], grid: &[f64], opts: &SolverOptions, mut visit: F) -> Result<()>
where
    F: FnMut(usize, &[C64]) -> Result<()>,
{
    let mut rhs = |t: f64, x: &[C64], dx: &mut [C64]| gen.apply_liouvillian(t, x, dx);
    let mut stepper = Stepper::new(t0, x0, opts.ode(gen.max_step()));
    let mut buf = vec![ZERO; x0.len()];
    for (k, &tg) in grid.iter().enumerate() {
        while stepper.t() < tg {
            stepper.step(&mut rhs, tg)?;
        }
        if tg == stepper.t() {
            visit(k, stepper.y())?;
        } else {
            stepper.interpolate(tg, &mut buf);
            visit(k, &buf)?;
        }
    }
    Ok(())
}

/// `dρ/dt` at time `t`.
pub fn lindblad_rhs(rho: &DensityMatrix, params: &SystemParams, drive: Option<&PulseShape>, t: f64) -> Result<DMatrix<C64>> {
    if rho.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            found: rho.dim(),
        });
    }
    let gen = Generator::new(params, drive)?;
    let x = rho.to_row_major();
    let mut out = vec![ZERO; x.len()];
    gen.apply_liouvillian(t, &x, &mut out);
    Ok(DMatrix::from_row_slice(rho.dim(), rho.dim(), &out))
}

fn worst_of(a: StateDiagnostics, b: StateDiagnostics) -> StateDiagnostics {
    StateDiagnostics {
        trace_error: a.trace_error.max(b.trace_error),
        hermiticity_error: a.hermiticity_error.max(b.hermiticity_error),
        min_eigenvalue: a.min_eigenvalue.min(b.min_eigenvalue),
    }
}

/// Evolves `rho0` (given at `t_grid[0]`) under the master equation and
/// samples observables on `t_grid`.
pub fn evolve_master(
    rho0: &DensityMatrix,
    t_grid: &[f64],
    params: &SystemParams,
    drive: Option<&PulseShape>,
    opts: &SolverOptions,
) -> Result<MasterEvolution> {
    opts.validate()?;
    check_grid(t_grid, "t_grid")?;
    if rho0.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            found: rho0.dim(),
        });
    }
    let gen = Generator::new(params, drive)?;
    let d = gen.dim();
    let ops = gen.operators();
    let number = SparseOp::from_dense(ops.number.matrix());
    let excited = SparseOp::from_dense(ops.excited.matrix());
    let a = SparseOp::from_dense(ops.a.matrix());

    let n = t_grid.len();
    let mut out = MasterEvolution {
        params: *params,
        times: t_grid.to_vec(),
        photon_number: Vec::with_capacity(n),
        excited: Vec::with_capacity(n),
        cavity_field: Vec::with_capacity(n),
        states: Vec::with_capacity(n),
        worst: StateDiagnostics {
            trace_error: 0.0,
            hermiticity_error: 0.0,
            min_eigenvalue: f64::INFINITY,
        },
    };
    propagate(&gen, t_grid[0], &rho0.to_row_major(), t_grid, opts, |k, x| {
        let rho = DensityMatrix::from_row_major(d, x);
        let diag = rho.diagnostics();
        if diag.trace_error > StateDiagnostics::TRACE_TOL
            || diag.hermiticity_error > 1e-9
            || diag.min_eigenvalue < StateDiagnostics::POSITIVITY_TOL
        {
            return Err(Error::InvalidState(format!(
                "at t = {} ps: trace error {:e}, hermiticity error {:e}, min eigenvalue {:e}",
                t_grid[k], diag.trace_error, diag.hermiticity_error, diag.min_eigenvalue
            )));
        }
        rho.check_truncation(params.n_max)?;
        out.worst = worst_of(out.worst, diag);
        out.photon_number.push(trace_with(&number, d, x).re);
        out.excited.push(trace_with(&excited, d, x).re);
        out.cavity_field.push(trace_with(&a, d, x));
        out.states.push(rho);
        Ok(())
    })?;
    Ok(out)
}

/// Runs `f` with `params`, doubling `n_max` (up to `n_max_cap`) whenever
/// it reports a truncation overflow. Returns the result together with the
/// truncation that succeeded.
pub fn with_truncation_escalation<T, F>(params: &SystemParams, n_max_cap: usize, mut f: F) -> Result<(T, SystemParams)>
where
    F: FnMut(&SystemParams) -> Result<T>,
{
    let mut p = *params;
    loop {
        match f(&p) {
            Err(Error::TruncationOverflow { population, n_max, .. }) if 2 * p.n_max <= n_max_cap => {
                log::info!("top Fock population {population:e} at n_max = {n_max}; retrying with {}", 2 * n_max);
                p.n_max *= 2;
            }
            other => return other.map(|v| (v, p)),
        }
    }
}

/// Unique stationary state of the (time-independent) generator with a cw
/// drive or no drive.
pub fn steady_state(params: &SystemParams, drive: Option<&PulseShape>) -> Result<DensityMatrix> {
    if let Some(p) = drive {
        if p.kind != PulseKind::Cw {
            return Err(invalid("drive", "steady state needs a cw drive"));
        }
    }
    if !params.has_damping() {
        return Err(Error::NoDamping);
    }
    let gen = Generator::new(params, drive)?;
    let d = gen.dim();
    let n = d * d;
    let l = gen.dense_liouvillian(0.0);
    let mut m = l.clone();
    for c in 0..n {
        m[(0, c)] = ZERO;
    }
    for i in 0..d {
        m[(0, i * d + i)] = C64::new(1.0, 0.0);
    }
    let mut rhs = DVector::from_element(n, ZERO);
    rhs[0] = C64::new(1.0, 0.0);
    let lu = m.lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..n).map(|i| u[(i, i)].norm()).collect();
    let umax = diag.iter().copied().fold(0.0, f64::max);
    let umin = diag.iter().copied().fold(f64::INFINITY, f64::min);
    if !(umin > 1e-12 * umax) {
        return Err(Error::NonUniqueSteadyState(format!(
            "pivot ratio {:e} indicates more than one stationary state",
            umin / umax
        )));
    }
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::NonUniqueSteadyState("singular Liouvillian".into()))?;
    let residual = (&l * &x).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lnorm = inf_norm(&l);
    if residual > 1e-10 * lnorm {
        return Err(Error::NonUniqueSteadyState(format!(
            "residual {residual:e} exceeds 1e-10 * |L| = {:e}",
            1e-10 * lnorm
        )));
    }
    let raw = DMatrix::from_row_slice(d, d, x.as_slice());
    let herm = (&raw + raw.adjoint()) * C64::new(0.5, 0.0);
    let rho = DensityMatrix::new(herm)?;
    rho.check_truncation(params.n_max)?;
    Ok(rho)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelatorKind {
    /// `⟨c†(τ) c(0)⟩`
    FirstOrder,
    /// Normalized `g²(τ)`.
    SecondOrder,
}

/// Operator whose correlations are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldOperator {
    /// `a`
    Cavity,
    /// `σ`
    Dot,
}

impl FieldOperator {
    pub(crate) fn operator<'a>(&self, gen: &'a Generator) -> &'a Operator {
        match self {
            FieldOperator::Cavity => &gen.ops.a,
            FieldOperator::Dot => &gen.ops.sigma,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorResult {
    pub tau: Vec<f64>,
    pub values: Vec<C64>,
    pub kind: CorrelatorKind,
}

/// Starting point of a correlation measurement.
#[derive(Debug, Clone, Copy)]
pub enum CorrelatorSource<'a> {
    /// Stationary state under a cw drive (kept on during `τ`).
    SteadyState(&'a PulseShape),
    /// Spontaneous emission from an initial state, no drive.
    Initial(&'a DensityMatrix),
}

fn check_tau_grid(tau: &[f64]) -> Result<()> {
    check_grid(tau, "tau_grid")?;
    if tau[0] < 0.0 {
        return Err(invalid("tau_grid", "delays must be >= 0"));
    }
    Ok(())
}

/// Propagates the (generally non-Hermitian) operator `x0` and returns
/// `Tr[O X(τ)]` on `tau`. The seed is rescaled to unit size internally so
/// that absolute tolerances stay meaningful for weak signals.
pub(crate) fn regression_trace(
    gen: &Generator,
    x0: &DMatrix<C64>,
    observable: &DMatrix<C64>,
    tau: &[f64],
    opts: &SolverOptions,
) -> Result<Vec<C64>> {
    let d = gen.dim();
    let scale = x0.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(vec![ZERO; tau.len()]);
    }
    let seed: Vec<C64> = (0..d * d).map(|k| x0[(k / d, k % d)] / scale).collect();
    let obs = SparseOp::from_dense(observable);
    let mut values = Vec::with_capacity(tau.len());
    propagate(gen, 0.0, &seed, tau, opts, |_, x| {
        values.push(trace_with(&obs, d, x) * scale);
        Ok(())
    })?;
    Ok(values)
}

/// `⟨c†(τ) c(0)⟩` via the quantum regression theorem.
pub fn correlator_first_order(
    params: &SystemParams,
    source: CorrelatorSource<'_>,
    field: FieldOperator,
    tau_grid: &[f64],
    opts: &SolverOptions,
) -> Result<CorrelatorResult> {
    opts.validate()?;
    check_tau_grid(tau_grid)?;
    let (rho, drive) = match source {
        CorrelatorSource::SteadyState(p) => (steady_state(params, Some(p))?, Some(p)),
        CorrelatorSource::Initial(r) => {
            if r.dim() != params.dim() {
                return Err(Error::DimensionMismatch {
                    expected: params.dim(),
                    found: r.dim(),
                });
            }
            (r.clone(), None)
        }
    };
    // a cw drive is time independent, so evolving from τ = 0 is exact
    let gen = Generator::new(params, drive)?;
    let c = field.operator(&gen).matrix().clone();
    let x0 = &c * rho.matrix();
    let values = regression_trace(&gen, &x0, &c.adjoint(), tau_grid, opts)?;
    Ok(CorrelatorResult {
        tau: tau_grid.to_vec(),
        values,
        kind: CorrelatorKind::FirstOrder,
    })
}

/// Smallest steady-state photon number for which `g²` is defined.
pub const G2_MIN_PHOTON_NUMBER: f64 = 1e-12;

/// `g²(τ) = Tr[a†a e^{Lτ}(a ρ a†)] / ⟨a†a⟩²` in the cw steady state.
pub fn g2_cw(params: &SystemParams, drive: &PulseShape, tau_grid: &[f64], opts: &SolverOptions) -> Result<CorrelatorResult> {
    opts.validate()?;
    check_tau_grid(tau_grid)?;
    let rho = steady_state(params, Some(drive))?;
    let gen = Generator::new(params, Some(drive))?;
    let a = gen.ops.a.matrix();
    let number = gen.ops.number.matrix();
    let n = rho.expect(&gen.ops.number).re;
    if n < G2_MIN_PHOTON_NUMBER {
        return Err(Error::VanishingSignal(n));
    }
    let x0 = a * rho.matrix() * a.adjoint();
    let raw = regression_trace(&gen, &x0, number, tau_grid, opts)?;
    let mut values = Vec::with_capacity(raw.len());
    for (tau, v) in tau_grid.iter().zip(raw) {
        let g2 = v.re / (n * n);
        if g2 < -1e-8 {
            return Err(Error::InvalidState(format!("g2({tau}) = {g2:e} is negative")));
        }
        values.push(C64::new(g2.max(0.0), 0.0));
    }
    Ok(CorrelatorResult {
        tau: tau_grid.to_vec(),
        values,
        kind: CorrelatorKind::SecondOrder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::drive::DriveTarget;
    use crate::hilbert::PureState;

    fn grid(t_end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
    }

    fn rates(g: f64, kappa: f64, gamma: f64, gamma_d: f64, delta: f64, n_max: usize) -> SystemParams {
        SystemParams::new(g, kappa, gamma, gamma_d, delta, n_max).unwrap()
    }

    #[test]
    fn excited_population_decays_at_gamma() {
        let p = rates(0.0, 0.3, 0.05, 0.0, 0.0, 2);
        let rho0 = PureState::basis(2, true, 0).unwrap().to_density();
        let t = grid(60.0, 30);
        let ev = evolve_master(&rho0, &t, &p, None, &SolverOptions::default()).unwrap();
        for (t, pe) in t.iter().zip(&ev.excited) {
            assert!((pe - (-0.05 * t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn photon_number_decays_at_kappa() {
        let p = rates(0.0, 0.2, 0.01, 0.0, 0.7, 2);
        let rho0 = PureState::basis(2, false, 1).unwrap().to_density();
        let t = grid(30.0, 30);
        let ev = evolve_master(&rho0, &t, &p, None, &SolverOptions::default()).unwrap();
        for (t, n) in t.iter().zip(&ev.photon_number) {
            assert!((n - (-0.2 * t).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn dephasing_coherence_rate() {
        // (γ_d/2)(σ_z ρ σ_z − ρ) maps ρ_eg → −γ_d ρ_eg, so |ρ_eg| = ½ e^{−γ_d t}
        let gd = 0.07;
        let p = rates(0.0, 0.0, 0.0, gd, 0.0, 1);
        let plus = PureState::new(DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            ZERO,
            C64::new(1.0, 0.0),
            ZERO,
        ]))
        .unwrap();
        let t = grid(40.0, 40);
        let ev = evolve_master(&plus.to_density(), &t, &p, None, &SolverOptions::default()).unwrap();
        for (t, rho) in t.iter().zip(&ev.states) {
            let coh = rho.matrix()[(2, 0)].norm();
            assert!((coh - 0.5 * (-gd * t).exp()).abs() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn frozen_without_hamiltonian_or_loss() {
        let p = rates(0.0, 0.0, 0.0, 0.0, 0.0, 2);
        let psi = PureState::new(DVector::from_vec(vec![
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
            ZERO,
            ZERO,
            ZERO,
            ZERO,
        ]))
        .unwrap();
        let rho0 = psi.to_density();
        let ev = evolve_master(&rho0, &grid(10.0, 5), &p, None, &SolverOptions::default()).unwrap();
        for rho in &ev.states {
            assert!((rho.matrix() - rho0.matrix()).camax() < 1e-14);
        }
    }

    #[test]
    fn vacuum_rabi_oscillation() {
        let g = 0.157;
        let p = rates(g, 0.0, 0.0, 0.0, 0.0, 2);
        let rho0 = PureState::basis(2, true, 0).unwrap().to_density();
        let t = grid(100.0, 200);
        let ev = evolve_master(&rho0, &t, &p, None, &SolverOptions::default()).unwrap();
        for (t, n) in t.iter().zip(&ev.photon_number) {
            assert!((n - (g * t).sin().powi(2)).abs() < 1e-7, "t = {t}");
        }
    }

    #[test]
    fn truncation_overflow_flagged() {
        let p = rates(0.0, 0.1, 0.0, 0.0, 0.0, 1);
        let drive = PulseShape::cw(0.2, 0.0, DriveTarget::Cavity);
        let rho0 = DensityMatrix::ground(1).unwrap();
        let r = evolve_master(&rho0, &grid(50.0, 50), &p, Some(&drive), &SolverOptions::default());
        assert!(matches!(r, Err(Error::TruncationOverflow { .. })));
        let (ev, used) = with_truncation_escalation(&p, 64, |q| {
            let rho0 = DensityMatrix::ground(q.n_max)?;
            evolve_master(&rho0, &grid(50.0, 50), q, Some(&drive), &SolverOptions::default())
        })
        .unwrap();
        assert!(used.n_max > 1);
        assert_eq!(ev.times.len(), 51);
    }

    #[test]
    fn undriven_steady_state_is_ground() {
        let p = rates(0.15, 0.2, 0.01, 0.01, 0.3, 2);
        let rho = steady_state(&p, None).unwrap();
        let ground = DensityMatrix::ground(2).unwrap();
        assert!((rho.matrix() - ground.matrix()).camax() < 1e-12);
    }

    #[test]
    fn steady_state_refuses_without_damping() {
        let p = rates(0.15, 0.0, 0.0, 0.0, 0.0, 2);
        let drive = PulseShape::cw(0.01, 0.0, DriveTarget::Cavity);
        assert_eq!(steady_state(&p, Some(&drive)), Err(Error::NoDamping));
    }

    #[test]
    fn degenerate_steady_state_flagged() {
        // the dot is neither coupled nor damped, so its population is conserved
        let p = rates(0.0, 0.2, 0.0, 0.05, 0.0, 2);
        assert!(matches!(steady_state(&p, None), Err(Error::NonUniqueSteadyState(_))));
    }

    #[test]
    fn empty_cavity_lorentzian_tail() {
        let (kappa, e) = (0.2, 1e-3);
        let p = rates(0.0, kappa, 0.01, 0.0, 0.0, 3);
        for w in [0.0, 0.5, -1.3] {
            let drive = PulseShape::cw(e, w, DriveTarget::Cavity);
            let rho = steady_state(&p, Some(&drive)).unwrap();
            let ops = crate::hilbert::SystemOperators::new(3).unwrap();
            let n = rho.expect(&ops.number).re;
            let oracle = e * e / (w * w + kappa * kappa / 4.0);
            assert!((n - oracle).abs() < 1e-9 * oracle.max(1e-12) + 1e-15, "w = {w}: {n} vs {oracle}");
        }
    }

    #[test]
    fn first_order_correlator_of_decaying_cavity() {
        // ⟨a†(τ)a(0)⟩ = e^{(iω_c − κ/2)τ} with ω_c = Δ/2
        let (kappa, delta) = (0.2, 0.8);
        let p = rates(0.0, kappa, 0.0, 0.0, delta, 2);
        let rho0 = PureState::basis(2, false, 1).unwrap().to_density();
        let tau = grid(40.0, 80);
        let c = correlator_first_order(&p, CorrelatorSource::Initial(&rho0), FieldOperator::Cavity, &tau, &SolverOptions::default())
            .unwrap();
        for (t, v) in tau.iter().zip(&c.values) {
            let oracle = (C64::new(-kappa / 2.0, delta / 2.0) * t).exp();
            assert!((v - oracle).norm() < 1e-7, "tau = {t}: {v} vs {oracle}");
        }
    }

    #[test]
    fn decoupled_correlators_do_not_cross_feed() {
        let p = rates(0.0, 0.2, 0.01, 0.0, 0.5, 1);
        let rho0 = PureState::basis(1, true, 0).unwrap().to_density();
        let tau = grid(50.0, 20);
        let c = correlator_first_order(&p, CorrelatorSource::Initial(&rho0), FieldOperator::Cavity, &tau, &SolverOptions::default())
            .unwrap();
        assert!(c.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn correlator_at_zero_matches_moment() {
        let p = rates(0.157, 0.2, 0.01, 0.0157, -1.0, 3);
        let drive = PulseShape::cw(0.01, -0.5, DriveTarget::Dot);
        let tau = [0.0, 1.0];
        let c = correlator_first_order(&p, CorrelatorSource::SteadyState(&drive), FieldOperator::Cavity, &tau, &SolverOptions::default())
            .unwrap();
        let rho = steady_state(&p, Some(&drive)).unwrap();
        let ops = crate::hilbert::SystemOperators::new(3).unwrap();
        let n = rho.expect(&ops.number);
        assert!((c.values[0] - n).norm() < 1e-9 * n.norm().max(1e-300));
    }

    #[test]
    fn coherent_drive_of_empty_cavity_is_poissonian() {
        let p = rates(0.0, 0.2, 0.0, 0.0, 0.0, 4);
        let drive = PulseShape::cw(0.003, 0.1, DriveTarget::Cavity);
        let tau = grid(30.0, 30);
        let g2 = g2_cw(&p, &drive, &tau, &SolverOptions::default()).unwrap();
        for v in &g2.values {
            assert!((v.re - 1.0).abs() < 1e-6, "{}", v.re);
        }
    }

    #[test]
    fn two_level_emitter_antibunches_perfectly() {
        // n_max = 1 with a huge cavity loss: the cavity adiabatically follows
        // the dot, which can hold a single excitation
        let p = rates(0.15, 50.0, 0.01, 0.0, 0.0, 1);
        let drive = PulseShape::cw(0.0005, 0.0, DriveTarget::Dot);
        let g2 = g2_cw(&p, &drive, &[0.0], &SolverOptions::default()).unwrap();
        assert!(g2.values[0].re.abs() < 1e-6, "{}", g2.values[0].re);
    }

    #[test]
    fn g2_guard_for_undriven_system() {
        let p = rates(0.15, 0.2, 0.01, 0.0, 0.0, 2);
        let drive = PulseShape::cw(0.0, 0.0, DriveTarget::Cavity);
        assert!(matches!(g2_cw(&p, &drive, &[0.0], &SolverOptions::default()), Err(Error::VanishingSignal(_))));
    }

    #[test]
    fn g2_relaxes_to_one() {
        let p = rates(0.157, 0.2047, 0.0076, 0.0157, -2.67, 3);
        let drive = PulseShape::cw(0.002, 1.335, DriveTarget::Dot);
        let g2 = g2_cw(&p, &drive, &[0.0, 3000.0], &SolverOptions::default()).unwrap();
        assert!(g2.values[0].re < 0.5);
        assert!((g2.values[1].re - 1.0).abs() < 0.01);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn liouvillian_is_linear(
            seed in 0u64..1000,
            alpha_re in -2.0f64..2.0, alpha_im in -2.0f64..2.0,
            beta_re in -2.0f64..2.0, beta_im in -2.0f64..2.0,
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let p = rates(0.15, 0.2, 0.01, 0.03, 0.4, 2);
            let drive = PulseShape::gaussian(0.1, 5.0, 10.0, 0.2, DriveTarget::Both { cavity: 1.0, dot: 0.5 });
            let gen = Generator::new(&p, Some(&drive)).unwrap();
            let n = gen.dim() * gen.dim();
            let mut rand_vec = || -> Vec<C64> { (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect() };
            let (x, y) = (rand_vec(), rand_vec());
            let (alpha, beta) = (C64::new(alpha_re, alpha_im), C64::new(beta_re, beta_im));
            let combo: Vec<C64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
            let (mut lx, mut ly, mut lc) = (vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]);
            gen.apply_liouvillian(3.0, &x, &mut lx);
            gen.apply_liouvillian(3.0, &y, &mut ly);
            gen.apply_liouvillian(3.0, &combo, &mut lc);
            for i in 0..n {
                let expect = alpha * lx[i] + beta * ly[i];
                proptest::prop_assert!((lc[i] - expect).norm() <= 1e-12 * (1.0 + expect.norm()));
            }
        }

        #[test]
        fn evolution_preserves_state_invariants(
            g in 0.0f64..0.3, kappa in 0.0f64..0.4, gamma in 0.0f64..0.05,
            gamma_d in 0.0f64..0.05, delta in -2.0f64..2.0, amp in 0.0f64..0.02,
        ) {
            let p = rates(g, kappa, gamma, gamma_d, delta, 3);
            let drive = PulseShape::gaussian(amp, 20.0, 15.0, 0.1, DriveTarget::Cavity);
            let (ev, _) = with_truncation_escalation(&p, 24, |q| {
                let rho0 = PureState::basis(q.n_max, true, 0)?.to_density();
                evolve_master(&rho0, &grid(60.0, 30), q, Some(&drive), &SolverOptions::default())
            })
            .unwrap();
            proptest::prop_assert!(ev.worst.trace_error <= 1e-9);
            proptest::prop_assert!(ev.worst.hermiticity_error <= 1e-9);
            proptest::prop_assert!(ev.worst.min_eigenvalue >= -1e-8);
        }
    }
}
