//! Sparse evaluation of the master-equation generator and of the
//! non-Hermitian effective Hamiltonian used by the trajectory solver.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::drive::PulseShape;
use crate::error::Result;
use crate::hilbert::{Operator, SystemOperators, SystemParams, C64, I, ZERO};

/// Decay channel of the master equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    /// `√κ a`
    Cavity,
    /// `√γ σ`
    Dot,
    /// `√(γ_d/2) σ_z`
    Dephasing,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct SparseOp {
    pub entries: Vec<(usize, usize, C64)>,
}

impl SparseOp {
    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let mut entries = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let v = m[(i, j)];
                if v != ZERO {
                    entries.push((i, j, v));
                }
            }
        }
        SparseOp { entries }
    }

    /// `y += coef · A x`
    #[inline]
    pub fn matvec_acc(&self, coef: C64, x: &[C64], y: &mut [C64]) {
        for &(i, j, v) in &self.entries {
            y[i] += coef * v * x[j];
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Jump {
    pub channel: Channel,
    pub op: SparseOp,
}

/// Generator of the dynamics for one parameter set and drive.
#[derive(Debug, Clone)]
pub struct Generator {
    pub(crate) dim: usize,
    pub(crate) params: SystemParams,
    pub(crate) ops: SystemOperators,
    drive: Option<PulseShape>,
    /// `H_static − (i/2) Σ c†c`
    heff_static: SparseOp,
    /// Drive operator `V` (multiplied by `E(t)`).
    drive_op: SparseOp,
    pub(crate) jumps: Vec<Jump>,
}

impl Generator {
    pub fn new(params: &SystemParams, drive: Option<&PulseShape>) -> Result<Self> {
        params.validate()?;
        if let Some(p) = drive {
            p.validate()?;
        }
        let ops = SystemOperators::new(params.n_max)?;
        let dim = ops.dim();
        let carrier = drive.map(|p| p.carrier_detuning).unwrap_or(0.0);
        let h = ops.static_hamiltonian(params, carrier);

        let mut jumps = Vec::new();
        let channels: [(Channel, f64, &Operator); 3] = [
            (Channel::Cavity, params.kappa, &ops.a),
            (Channel::Dot, params.gamma, &ops.sigma),
            (Channel::Dephasing, 0.5 * params.gamma_d, &ops.sigma_z),
        ];
        let mut decay = DMatrix::<C64>::zeros(dim, dim);
        for (channel, rate, op) in channels {
            if rate > 0.0 {
                let c = op.matrix() * C64::new(rate.sqrt(), 0.0);
                let cdc = c.adjoint() * &c;
                decay += &cdc;
                jumps.push(Jump {
                    channel,
                    op: SparseOp::from_dense(&c),
                });
            }
        }
        let heff = h.matrix() - decay * C64::new(0.0, 0.5);
        let drive_op = match drive {
            Some(p) => SparseOp::from_dense(ops.drive_operator(p).matrix()),
            None => SparseOp::default(),
        };
        Ok(Generator {
            dim,
            params: *params,
            ops,
            drive: drive.copied(),
            heff_static: SparseOp::from_dense(&heff),
            drive_op,
            jumps,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn operators(&self) -> &SystemOperators {
        &self.ops
    }

    pub fn drive(&self) -> Option<&PulseShape> {
        self.drive.as_ref()
    }

    #[inline]
    fn envelope(&self, t: f64) -> f64 {
        self.drive.as_ref().map(|p| p.envelope(t)).unwrap_or(0.0)
    }

    /// Largest step an integrator should take to resolve the drive.
    pub fn max_step(&self) -> f64 {
        self.drive.as_ref().map(|p| p.max_step()).unwrap_or(f64::INFINITY)
    }

    /// `out = L(t)[X]` for any (not necessarily Hermitian) `X`, both stored
    /// row-major as `dim × dim`.
    pub fn apply_liouvillian(&self, t: f64, x: &[C64], out: &mut [C64]) {
        let d = self.dim;
        out.iter_mut().for_each(|z| *z = ZERO);
        let e = self.envelope(t);
        let terms: [(&SparseOp, C64); 2] = [(&self.heff_static, C64::new(1.0, 0.0)), (&self.drive_op, C64::new(e, 0.0))];
        for (op, scale) in terms {
            if scale == ZERO {
                continue;
            }
            for &(i, k, v) in &op.entries {
                let v = v * scale;
                // −i H_eff X
                let left = -I * v;
                let (row_out, row_x) = (i * d, k * d);
                for j in 0..d {
                    out[row_out + j] += left * x[row_x + j];
                }
                // +i X H_eff†, entry (i, k) of H_eff feeds column i of the output
                let right = I * v.conj();
                for r in 0..d {
                    out[r * d + i] += right * x[r * d + k];
                }
            }
        }
        for jump in &self.jumps {
            for &(i, k, v) in &jump.op.entries {
                for &(j, l, w) in &jump.op.entries {
                    out[i * d + j] += v * w.conj() * x[k * d + l];
                }
            }
        }
    }

    /// `out = −i H_eff(t) ψ`
    pub fn apply_effective(&self, t: f64, psi: &[C64], out: &mut [C64]) {
        out.iter_mut().for_each(|z| *z = ZERO);
        self.heff_static.matvec_acc(-I, psi, out);
        let e = self.envelope(t);
        if e != 0.0 {
            self.drive_op.matvec_acc(-I * e, psi, out);
        }
    }

    /// Dense superoperator acting on row-major vectorized matrices.
    pub fn dense_liouvillian(&self, t: f64) -> DMatrix<C64> {
        let n = self.dim * self.dim;
        let mut l = DMatrix::zeros(n, n);
        let mut basis = vec![ZERO; n];
        let mut col = vec![ZERO; n];
        for c in 0..n {
            basis[c] = C64::new(1.0, 0.0);
            self.apply_liouvillian(t, &basis, &mut col);
            for (r, v) in col.iter().enumerate() {
                l[(r, c)] = *v;
            }
            basis[c] = ZERO;
        }
        l
    }

    /// Expected jump rates `⟨c_k† c_k⟩` for an unnormalized state.
    pub(crate) fn jump_weights(&self, psi: &[C64], scratch: &mut [C64], weights: &mut Vec<f64>) {
        weights.clear();
        for jump in &self.jumps {
            scratch.iter_mut().for_each(|z| *z = ZERO);
            jump.op.matvec_acc(C64::new(1.0, 0.0), psi, scratch);
            weights.push(scratch.iter().map(|z| z.norm_sqr()).sum());
        }
    }
}
