//! Dormand–Prince 5(4) integrator for complex linear systems with
//! continuous (dense) output, after Hairer, Nørsett & Wanner.

use crate::error::{Error, Result};
use crate::hilbert::{C64, ZERO};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-8,
            atol: 1e-12,
            h_max: f64::INFINITY,
            max_steps: 5_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Single-trajectory stepper. Call [`Stepper::step`] repeatedly; between
/// calls the last step can be interpolated with [`Stepper::interpolate`].
#[derive(Debug, Clone)]
pub struct Stepper {
    opts: OdeOptions,
    t: f64,
    t_prev: f64,
    h: f64,
    y: Vec<C64>,
    k: [Vec<C64>; 7],
    ytmp: Vec<C64>,
    ynew: Vec<C64>,
    err: Vec<C64>,
    cont: [Vec<C64>; 5],
    fsal_valid: bool,
    steps: usize,
}

impl Stepper {
    pub fn new(t0: f64, y0: &[C64], opts: OdeOptions) -> Self {
        let n = y0.len();
        let z = || vec![ZERO; n];
        Stepper {
            opts,
            t: t0,
            t_prev: t0,
            h: 0.0,
            y: y0.to_vec(),
            k: [z(), z(), z(), z(), z(), z(), z()],
            ytmp: z(),
            ynew: z(),
            err: z(),
            cont: [z(), z(), z(), z(), z()],
            fsal_valid: false,
            steps: 0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn t_prev(&self) -> f64 {
        self.t_prev
    }

    pub fn y(&self) -> &[C64] {
        &self.y
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Restarts from a new state, keeping the current step-size estimate.
    pub fn reset(&mut self, t: f64, y: &[C64]) {
        self.t = t;
        self.t_prev = t;
        self.y.copy_from_slice(y);
        self.fsal_valid = false;
    }

    fn weighted_norm(&self, v: &[C64], a: &[C64], b: &[C64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..v.len() {
            let sc = self.opts.atol + self.opts.rtol * a[i].norm().max(b[i].norm());
            let r = v[i].norm() / sc;
            acc += r * r;
        }
        (acc / v.len().max(1) as f64).sqrt()
    }

    fn initial_step<F>(&mut self, f: &mut F, span: f64) -> f64
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let d0 = self.weighted_norm(&self.y, &self.y, &self.y);
        let d1 = self.weighted_norm(&self.k[0], &self.y, &self.y);
        let mut h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0 = h0.min(span).min(self.opts.h_max);
        // one explicit Euler step to estimate the second derivative
        for i in 0..self.y.len() {
            self.ytmp[i] = self.y[i] + self.k[0][i] * h0;
        }
        f(self.t + h0, &self.ytmp, &mut self.k[1]);
        let mut diff = std::mem::take(&mut self.err);
        for i in 0..self.y.len() {
            diff[i] = self.k[1][i] - self.k[0][i];
        }
        let d2 = self.weighted_norm(&diff, &self.y, &self.y) / h0;
        self.err = diff;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span).min(self.opts.h_max)
    }

    /// Takes one accepted step, never passing `t_limit`.
    pub fn step<F>(&mut self, f: &mut F, t_limit: f64) -> Result<()>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let span = t_limit - self.t;
        if span <= 0.0 {
            return Ok(());
        }
        if !self.fsal_valid {
            let (k0, _) = self.k.split_at_mut(1);
            f(self.t, &self.y, &mut k0[0]);
            self.fsal_valid = true;
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(f, span);
        }
        let n = self.y.len();
        let mut rejected = false;
        loop {
            if self.steps >= self.opts.max_steps {
                return Err(Error::TooManySteps {
                    max_steps: self.opts.max_steps,
                    t_end: t_limit,
                });
            }
            let mut h = self.h.min(self.opts.h_max);
            let last = h >= span * (1.0 - 1e-12);
            if last {
                h = span;
            }
            if h < 1e-14 * self.t.abs().max(1.0) {
                return Err(Error::StepControl { t: self.t, h });
            }
            let t = self.t;
            let hc = C64::new(h, 0.0);
            {
                let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
                let y = &self.y;
                let yt = &mut self.ytmp;
                for i in 0..n {
                    yt[i] = y[i] + hc * (A21 * k1[i]);
                }
                f(t + C2 * h, yt, k2);
                for i in 0..n {
                    yt[i] = y[i] + hc * (A31 * k1[i] + A32 * k2[i]);
                }
                f(t + C3 * h, yt, k3);
                for i in 0..n {
                    yt[i] = y[i] + hc * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
                }
                f(t + C4 * h, yt, k4);
                for i in 0..n {
                    yt[i] = y[i] + hc * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
                }
                f(t + C5 * h, yt, k5);
                for i in 0..n {
                    yt[i] = y[i] + hc * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
                }
                f(t + h, yt, k6);
                let yn = &mut self.ynew;
                for i in 0..n {
                    yn[i] = y[i] + hc * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
                }
                f(t + h, yn, k7);
                let e = &mut self.err;
                for i in 0..n {
                    e[i] = hc * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                }
            }
            let err = self.weighted_norm(&self.err, &self.y, &self.ynew);
            if !err.is_finite() {
                self.h = h * 0.2;
                rejected = true;
                continue;
            }
            self.steps += 1;
            if err <= 1.0 {
                // dense-output coefficients
                {
                    let [k1, _k2, k3, k4, k5, k6, k7] = &self.k;
                    let [r1, r2, r3, r4, r5] = &mut self.cont;
                    for i in 0..n {
                        let dy = self.ynew[i] - self.y[i];
                        let bspl = hc * k1[i] - dy;
                        r1[i] = self.y[i];
                        r2[i] = dy;
                        r3[i] = bspl;
                        r4[i] = dy - hc * k7[i] - bspl;
                        r5[i] = hc * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                    }
                }
                self.t_prev = t;
                self.t = if last { t_limit } else { t + h };
                std::mem::swap(&mut self.y, &mut self.ynew);
                let (k0, rest) = self.k.split_at_mut(1);
                std::mem::swap(&mut k0[0], &mut rest[5]);
                let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 10.0);
                let fac = if rejected { fac.min(1.0) } else { fac };
                let h_next = h * fac;
                // keep the unclamped estimate when the step was shortened to hit t_limit
                self.h = if last { self.h.max(h_next) } else { h_next };
                return Ok(());
            }
            rejected = true;
            self.h = h * (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
        }
    }

    /// Evaluates the interpolant of the last accepted step at
    /// `t ∈ [t_prev, t]`.
    pub fn interpolate(&self, t: f64, out: &mut [C64]) {
        let h = self.t - self.t_prev;
        if h <= 0.0 {
            out.copy_from_slice(&self.y);
            return;
        }
        let theta = ((t - self.t_prev) / h).clamp(0.0, 1.0);
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.cont;
        for i in 0..out.len() {
            out[i] = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
        }
    }
}

/// Integrates from `t0` and records the state at every time in `grid`
/// (which must be non-decreasing and start at or after `t0`).
pub fn integrate_on_grid<F>(mut f: F, t0: f64, y0: &[C64], grid: &[f64], opts: OdeOptions) -> Result<Vec<Vec<C64>>>
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let mut stepper = Stepper::new(t0, y0, opts);
    let mut out = Vec::with_capacity(grid.len());
    let mut buf = vec![ZERO; y0.len()];
    for &tg in grid {
        while stepper.t() < tg {
            stepper.step(&mut f, tg)?;
        }
        if tg == stepper.t() {
            out.push(stepper.y().to_vec());
        } else {
            stepper.interpolate(tg, &mut buf);
            out.push(buf.clone());
        }
    }
    Ok(out)
}
