//! Truncated joint Hilbert space of a two-level emitter and one cavity mode.
//!
//! Basis ordering is `|qd⟩ ⊗ |n⟩` with `qd ∈ {g = 0, e = 1}` and
//! `n ∈ 0..=n_max`, so the flat index of `|qd, n⟩` is `qd·(n_max+1) + n`.
//!
//! Hamiltonians are written in the frame rotating at the drive carrier
//! frequency `ω_p`:
//!
//! ```text
//! H = (ω_c − ω_p) a†a + (ω_qd − ω_p) σ†σ + i g (σ a† − a σ†) + E(t) V
//! ```
//!
//! where `V = a e^{-iφ} + a† e^{iφ}` (cavity drive) or `σ e^{-iφ} + σ† e^{iφ}`
//! (dot drive). Frequencies are measured from the mean of the QD and cavity
//! frequencies, so `ω_c = Δ/2`, `ω_qd = −Δ/2` with `Δ = ω_c − ω_qd`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::drive::PulseShape;
use crate::error::{invalid, Error, Result};

pub type C64 = Complex64;

pub(crate) const I: C64 = C64::new(0.0, 1.0);
pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Top-Fock-level population above which a truncation is rejected.
pub const TRUNCATION_THRESHOLD: f64 = 1e-6;

/// Physical parameters of the QD–cavity system, all in rad/ps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Coherent QD–cavity coupling.
    pub g: f64,
    /// Cavity energy (photon-number) decay rate.
    pub kappa: f64,
    /// QD excited-population decay rate.
    pub gamma: f64,
    /// Pure dephasing rate; enters as `(γ_d/2)(σ_z ρ σ_z − ρ)`.
    pub gamma_d: f64,
    /// Detuning `ω_c − ω_qd`.
    pub delta: f64,
    /// Highest Fock state kept.
    pub n_max: usize,
}

impl SystemParams {
    pub fn new(g: f64, kappa: f64, gamma: f64, gamma_d: f64, delta: f64, n_max: usize) -> Result<Self> {
        let p = SystemParams {
            g,
            kappa,
            gamma,
            gamma_d,
            delta,
            n_max,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("g", self.g),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("gamma_d", self.gamma_d),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(invalid(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        if !self.delta.is_finite() {
            return Err(invalid("delta", "must be finite"));
        }
        if self.n_max == 0 {
            return Err(invalid("n_max", "need at least one photon (n_max >= 1)"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        hilbert_dim(self.n_max)
    }

    pub fn has_damping(&self) -> bool {
        self.kappa > 0.0 || self.gamma > 0.0 || self.gamma_d > 0.0
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn with_gamma_d(mut self, gamma_d: f64) -> Self {
        self.gamma_d = gamma_d;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_n_max(mut self, n_max: usize) -> Self {
        self.n_max = n_max;
        self
    }

    /// Frequencies of (cavity, QD) relative to the carrier, i.e. the
    /// coefficients of `a†a` and `σ†σ` in the rotating frame.
    pub fn frame_detunings(&self, carrier_detuning: f64) -> (f64, f64) {
        (
            0.5 * self.delta - carrier_detuning,
            -0.5 * self.delta - carrier_detuning,
        )
    }
}

pub fn hilbert_dim(n_max: usize) -> usize {
    2 * (n_max + 1)
}

pub(crate) fn index(qd: usize, n: usize, n_max: usize) -> usize {
    qd * (n_max + 1) + n
}

fn check_n_max(n_max: usize) -> Result<()> {
    if n_max == 0 {
        Err(invalid("n_max", "need at least one photon (n_max >= 1)"))
    } else {
        Ok(())
    }
}

/// Dense complex square matrix on the joint Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl Operator {
    pub fn from_matrix(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        Ok(Operator(m))
    }

    pub fn zeros(dim: usize) -> Self {
        Operator(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Operator(DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    pub fn adjoint(&self) -> Operator {
        Operator(self.0.adjoint())
    }

    pub fn scale(&self, s: C64) -> Operator {
        Operator(&self.0 * s)
    }

    fn check_same(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_same(other)?;
        Ok(Operator(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &Operator) -> Result<Operator> {
        self.check_same(other)?;
        Ok(Operator(&self.0 - &other.0))
    }

    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        self.check_same(other)?;
        Ok(Operator(&self.0 * &other.0))
    }

    pub fn commutator(&self, other: &Operator) -> Result<Operator> {
        self.check_same(other)?;
        Ok(Operator(&self.0 * &other.0 - &other.0 * &self.0))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn tensor(&self, other: &Operator) -> Operator {
        Operator(self.0.kronecker(&other.0))
    }

    pub fn apply(&self, psi: &PureState) -> Result<DVector<C64>> {
        if psi.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: psi.dim(),
            });
        }
        Ok(&self.0 * psi.amplitudes())
    }

    /// `max_ij |A_ij|`
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        inf_norm(&self.0)
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        let diff = inf_norm(&(&self.0 - self.0.adjoint()));
        diff <= rel_tol * self.norm_inf().max(f64::MIN_POSITIVE)
    }

    /// Eigenvalues of a Hermitian operator, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = self.0.clone().symmetric_eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    /// `Tr[A ρ]`
    pub fn expect(&self, rho: &DensityMatrix) -> C64 {
        trace_product(&self.0, rho.matrix())
    }
}

pub(crate) fn inf_norm(m: &DMatrix<C64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `Tr[A B]` without forming the product.
pub(crate) fn trace_product(a: &DMatrix<C64>, b: &DMatrix<C64>) -> C64 {
    let n = a.nrows();
    let mut acc = ZERO;
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

fn ladder(n_max: usize) -> DMatrix<C64> {
    let d = n_max + 1;
    let mut m = DMatrix::zeros(d, d);
    for n in 1..d {
        m[(n - 1, n)] = C64::new((n as f64).sqrt(), 0.0);
    }
    m
}

/// Cavity annihilation operator `I₂ ⊗ a`.
pub fn build_annihilation(n_max: usize) -> Result<Operator> {
    check_n_max(n_max)?;
    let id2 = Operator::identity(2);
    Ok(id2.tensor(&Operator(ladder(n_max))))
}

/// QD lowering operator `σ ⊗ I` with `σ = |g⟩⟨e|`.
pub fn build_sigma(n_max: usize) -> Result<Operator> {
    check_n_max(n_max)?;
    let mut s = DMatrix::zeros(2, 2);
    s[(0, 1)] = ONE;
    Ok(Operator(s).tensor(&Operator::identity(n_max + 1)))
}

/// `σ_z = [σ†, σ] = |e⟩⟨e| − |g⟩⟨g|`.
pub fn build_sigma_z(n_max: usize) -> Result<Operator> {
    let s = build_sigma(n_max)?;
    s.adjoint().commutator(&s)
}

pub fn build_number(n_max: usize) -> Result<Operator> {
    let a = build_annihilation(n_max)?;
    a.adjoint().mul(&a)
}

/// Hamiltonian in the frame of the drive carrier (or of the mean QD/cavity
/// frequency when undriven), evaluated at time `t`.
pub fn build_hamiltonian(params: &SystemParams, drive: Option<&PulseShape>, t: f64) -> Result<Operator> {
    params.validate()?;
    if let Some(p) = drive {
        p.validate()?;
    }
    let ops = SystemOperators::new(params.n_max)?;
    let carrier = drive.map(|p| p.carrier_detuning).unwrap_or(0.0);
    let mut h = ops.static_hamiltonian(params, carrier);
    if let Some(p) = drive {
        let v = ops.drive_operator(p);
        h = h.add(&v.scale(C64::new(p.envelope(t), 0.0)))?;
    }
    Ok(h)
}

/// Operators shared by every solver, built once per truncation.
#[derive(Debug, Clone)]
pub struct SystemOperators {
    pub n_max: usize,
    pub a: Operator,
    pub sigma: Operator,
    pub sigma_z: Operator,
    pub number: Operator,
    pub excited: Operator,
}

impl SystemOperators {
    pub fn new(n_max: usize) -> Result<Self> {
        let a = build_annihilation(n_max)?;
        let sigma = build_sigma(n_max)?;
        let sigma_z = build_sigma_z(n_max)?;
        let number = a.adjoint().mul(&a)?;
        let excited = sigma.adjoint().mul(&sigma)?;
        Ok(SystemOperators {
            n_max,
            a,
            sigma,
            sigma_z,
            number,
            excited,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    /// Drive-independent part of the Hamiltonian.
    pub fn static_hamiltonian(&self, params: &SystemParams, carrier_detuning: f64) -> Operator {
        let (wc, wq) = params.frame_detunings(carrier_detuning);
        let a = self.a.matrix();
        let s = self.sigma.matrix();
        let coupling = (s * a.adjoint() - a * s.adjoint()) * C64::new(0.0, params.g);
        let m = self.number.matrix() * C64::new(wc, 0.0) + self.excited.matrix() * C64::new(wq, 0.0) + coupling;
        Operator(m)
    }

    /// Drive operator `V` multiplying `E(t)`.
    pub fn drive_operator(&self, pulse: &PulseShape) -> Operator {
        let (wc, wd) = pulse.target.weights();
        let phase = C64::from_polar(1.0, pulse.phase);
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        if wc != 0.0 {
            let a = self.a.matrix();
            m += (a * phase.conj() + a.adjoint() * phase) * C64::new(wc, 0.0);
        }
        if wd != 0.0 {
            let s = self.sigma.matrix();
            m += (s * phase.conj() + s.adjoint() * phase) * C64::new(wd, 0.0);
        }
        Operator(m)
    }
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState(DVector<C64>);

impl PureState {
    /// Normalizes `amplitudes`; rejects the zero vector.
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        let n = amplitudes.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidState("cannot normalize a zero or non-finite vector".into()));
        }
        Ok(PureState(amplitudes / C64::new(n, 0.0)))
    }

    /// Basis state `|qd, n⟩`.
    pub fn basis(n_max: usize, excited: bool, photons: usize) -> Result<Self> {
        check_n_max(n_max)?;
        if photons > n_max {
            return Err(invalid("photons", format!("{photons} exceeds n_max = {n_max}")));
        }
        let mut v = DVector::zeros(hilbert_dim(n_max));
        v[index(excited as usize, photons, n_max)] = ONE;
        Ok(PureState(v))
    }

    pub fn ground(n_max: usize) -> Result<Self> {
        Self::basis(n_max, false, 0)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn expect(&self, op: &Operator) -> C64 {
        (self.0.adjoint() * op.matrix() * &self.0)[(0, 0)]
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix(&self.0 * self.0.adjoint())
    }

    /// Embeds into a larger truncation (zero amplitude on the new levels).
    pub fn embed(&self, from_n_max: usize, to_n_max: usize) -> Result<PureState> {
        if hilbert_dim(from_n_max) != self.dim() || to_n_max < from_n_max {
            return Err(Error::DimensionMismatch {
                expected: hilbert_dim(from_n_max),
                found: self.dim(),
            });
        }
        let mut v = DVector::zeros(hilbert_dim(to_n_max));
        for qd in 0..2 {
            for n in 0..=from_n_max {
                v[index(qd, n, to_n_max)] = self.0[index(qd, n, from_n_max)];
            }
        }
        Ok(PureState(v))
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<C64>);

/// Deviations of a candidate density matrix from the physical constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateDiagnostics {
    pub trace_error: f64,
    pub hermiticity_error: f64,
    pub min_eigenvalue: f64,
}

impl StateDiagnostics {
    pub const TRACE_TOL: f64 = 1e-9;
    pub const HERMITICITY_TOL: f64 = 1e-10;
    pub const POSITIVITY_TOL: f64 = -1e-8;

    pub fn is_valid(&self) -> bool {
        self.trace_error <= Self::TRACE_TOL
            && self.hermiticity_error <= Self::HERMITICITY_TOL
            && self.min_eigenvalue >= Self::POSITIVITY_TOL
    }
}

impl DensityMatrix {
    /// Validates trace, Hermiticity and positivity.
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        let rho = DensityMatrix::new_unchecked(m)?;
        let d = rho.diagnostics();
        if !d.is_valid() {
            return Err(Error::InvalidState(format!(
                "trace error {:e}, hermiticity error {:e}, min eigenvalue {:e}",
                d.trace_error, d.hermiticity_error, d.min_eigenvalue
            )));
        }
        Ok(rho)
    }

    pub(crate) fn new_unchecked(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        Ok(DensityMatrix(m))
    }

    pub fn ground(n_max: usize) -> Result<Self> {
        Ok(PureState::ground(n_max)?.to_density())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.0
            .iter()
            .zip(self.0.adjoint().iter())
            .fold(0.0, |m, (x, y)| m.max((x - y).norm()))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn diagnostics(&self) -> StateDiagnostics {
        StateDiagnostics {
            trace_error: (self.trace() - ONE).norm(),
            hermiticity_error: self.hermiticity_error(),
            min_eigenvalue: self.min_eigenvalue(),
        }
    }

    pub fn expect(&self, op: &Operator) -> C64 {
        trace_product(op.matrix(), &self.0)
    }

    /// Embeds into a larger truncation (zero weight on the new levels).
    pub fn embed(&self, from_n_max: usize, to_n_max: usize) -> Result<DensityMatrix> {
        if hilbert_dim(from_n_max) != self.dim() || to_n_max < from_n_max {
            return Err(Error::DimensionMismatch {
                expected: hilbert_dim(from_n_max),
                found: self.dim(),
            });
        }
        let d = hilbert_dim(to_n_max);
        let mut m = DMatrix::zeros(d, d);
        for q1 in 0..2 {
            for n1 in 0..=from_n_max {
                for q2 in 0..2 {
                    for n2 in 0..=from_n_max {
                        m[(index(q1, n1, to_n_max), index(q2, n2, to_n_max))] =
                            self.0[(index(q1, n1, from_n_max), index(q2, n2, from_n_max))];
                    }
                }
            }
        }
        Ok(DensityMatrix(m))
    }

    /// Row-major flattening used by the solvers.
    pub(crate) fn to_row_major(&self) -> Vec<C64> {
        let d = self.dim();
        (0..d * d).map(|k| self.0[(k / d, k % d)]).collect()
    }

    pub(crate) fn from_row_major(d: usize, v: &[C64]) -> DensityMatrix {
        DensityMatrix(DMatrix::from_row_slice(d, d, v))
    }

    /// Population in Fock level `n_max` (summed over QD states).
    pub fn top_fock_population(&self, n_max: usize) -> f64 {
        (0..2).map(|qd| self.0[(index(qd, n_max, n_max), index(qd, n_max, n_max))].re).sum()
    }

    pub fn check_truncation(&self, n_max: usize) -> Result<()> {
        let population = self.top_fock_population(n_max);
        if population > TRUNCATION_THRESHOLD {
            return Err(Error::TruncationOverflow {
                population,
                threshold: TRUNCATION_THRESHOLD,
                n_max,
            });
        }
        Ok(())
    }
}
