//! Signal-processing helpers shared by the experiment drivers: peak
//! finding, detector response and exponential tail fits.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Local maxima of `y` not lower than `min_rel · max(y)`, refined by a
/// parabola through the three neighbouring samples. Sorted by position.
pub fn find_peaks(x: &[f64], y: &[f64], min_rel: f64) -> Vec<(f64, f64)> {
    let top = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut peaks = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        if y[i] > y[i - 1] && y[i] >= y[i + 1] && y[i] >= min_rel * top {
            peaks.push(parabolic_vertex(&x[i - 1..=i + 1], &y[i - 1..=i + 1]));
        }
    }
    peaks
}

/// Local minima (same refinement as [`find_peaks`]).
pub fn find_valleys(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    let neg: Vec<f64> = y.iter().map(|v| -v).collect();
    let mut out = Vec::new();
    for i in 1..y.len().saturating_sub(1) {
        if neg[i] > neg[i - 1] && neg[i] >= neg[i + 1] {
            let (px, py) = parabolic_vertex(&x[i - 1..=i + 1], &neg[i - 1..=i + 1]);
            out.push((px, -py));
        }
    }
    out
}

fn parabolic_vertex(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (x0, x1, x2) = (x[0], x[1], x[2]);
    let (y0, y1, y2) = (y[0], y[1], y[2]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if a >= 0.0 {
        return (x1, y1);
    }
    let b = d01 - a * (x0 + x1);
    let xv = -b / (2.0 * a);
    let c = y0 - a * x0 * x0 - b * x0;
    (xv.clamp(x0, x2), (a * xv * xv + b * xv + c).max(y1))
}

/// Linear interpolation of `(x, y)` at `xq` (clamped to the ends).
pub fn interpolate(x: &[f64], y: &[f64], xq: f64) -> f64 {
    if xq <= x[0] {
        return y[0];
    }
    let n = x.len();
    if xq >= x[n - 1] {
        return y[n - 1];
    }
    let k = x.partition_point(|v| *v <= xq) - 1;
    let f = (xq - x[k]) / (x[k + 1] - x[k]);
    y[k] + f * (y[k + 1] - y[k])
}

/// Full width at half maximum of the highest peak (linear interpolation
/// of the crossings).
pub fn fwhm(x: &[f64], y: &[f64]) -> Result<f64> {
    let (imax, &top) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Analysis("empty signal".into()))?;
    let half = top / 2.0;
    let mut lo = None;
    for i in (0..imax).rev() {
        if y[i] < half {
            lo = Some(x[i] + (half - y[i]) / (y[i + 1] - y[i]) * (x[i + 1] - x[i]));
            break;
        }
    }
    let mut hi = None;
    for i in imax + 1..y.len() {
        if y[i] < half {
            hi = Some(x[i - 1] + (y[i - 1] - half) / (y[i - 1] - y[i]) * (x[i] - x[i - 1]));
            break;
        }
    }
    match (lo, hi) {
        (Some(a), Some(b)) => Ok(b - a),
        _ => Err(Error::Analysis("peak is not resolved within the scan".into())),
    }
}

fn uniform_step(t: &[f64]) -> Result<f64> {
    if t.len() < 2 {
        return Err(invalid("times", "need at least two samples"));
    }
    let dt = t[1] - t[0];
    let uniform = t.windows(2).all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1.0));
    if !(dt > 0.0 && uniform) {
        return Err(invalid("times", "detector models need a uniform grid"));
    }
    Ok(dt)
}

/// Average over a random delay with density `e^{−s/τ}/τ`, for a signal that
/// vanishes before `t[0]`. Exact for a piecewise-linear signal.
pub fn exponential_delay_average(t: &[f64], x: &[f64], tau: f64) -> Result<Vec<f64>> {
    if tau < 0.0 || !tau.is_finite() {
        return Err(invalid("jitter_tau", "must be finite and >= 0"));
    }
    if tau == 0.0 {
        return Ok(x.to_vec());
    }
    let h = uniform_step(t)?;
    let e = (-h / tau).exp();
    let mut y = Vec::with_capacity(x.len());
    y.push(0.0);
    for k in 0..x.len() - 1 {
        let m = (x[k + 1] - x[k]) / h;
        let prev = y[k];
        y.push(x[k + 1] - m * tau + (prev - x[k] + m * tau) * e);
    }
    Ok(y)
}

/// Gaussian instrument response. Each sample is spread over its
/// neighbours with weights renormalized to one, so the sum is preserved
/// exactly even near the ends of the record.
pub fn gaussian_blur(t: &[f64], x: &[f64], fwhm: f64) -> Result<Vec<f64>> {
    if fwhm < 0.0 || !fwhm.is_finite() {
        return Err(invalid("detector.irf_fwhm", "must be finite and >= 0"));
    }
    if fwhm == 0.0 {
        return Ok(x.to_vec());
    }
    let h = uniform_step(t)?;
    let sigma = fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
    let reach = (6.0 * sigma / h).ceil() as isize;
    let kernel: Vec<f64> = (-reach..=reach)
        .map(|j| {
            let u = j as f64 * h / sigma;
            (-0.5 * u * u).exp()
        })
        .collect();
    let n = x.len() as isize;
    let mut y = vec![0.0; x.len()];
    for i in 0..n {
        let lo = (i - reach).max(0);
        let hi = (i + reach).min(n - 1);
        let norm: f64 = (lo..=hi).map(|j| kernel[(j - i + reach) as usize]).sum();
        for j in lo..=hi {
            y[j as usize] += x[i as usize] * kernel[(j - i + reach) as usize] / norm;
        }
    }
    Ok(y)
}

/// Result of a mono-exponential tail fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// 1/e lifetime, ps.
    pub lifetime: f64,
    pub t_start: f64,
    pub t_stop: f64,
    pub points: usize,
}

/// Log-linear least-squares fit of `y ∝ e^{−t/τ}` from the first maximum at
/// or after `t_from` down to `e^{−2}` of that maximum.
pub fn fit_exponential_tail(t: &[f64], y: &[f64], t_from: f64) -> Result<TailFit> {
    let first = t.partition_point(|v| *v < t_from);
    if first + 2 >= t.len() {
        return Err(Error::Analysis("fit window starts after the end of the trace".into()));
    }
    let (offset, &peak) = y[first..]
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Analysis("empty trace".into()))?;
    if !(peak > 0.0) {
        return Err(Error::Analysis("no signal to fit".into()));
    }
    let start = first + offset;
    let floor = peak * (-2.0f64).exp();
    let stop = (start..y.len()).find(|&k| y[k] < floor).ok_or_else(|| {
        Error::Analysis(format!(
            "signal does not decay to e^-2 of its peak before t = {} ps",
            t[t.len() - 1]
        ))
    })?;
    if stop - start < 3 {
        return Err(Error::Analysis("fit window has fewer than three samples".into()));
    }
    if y[start..stop].windows(2).any(|w| w[1] > w[0] * (1.0 + 1e-9)) {
        return Err(Error::Analysis("trace is not monotone inside the fit window".into()));
    }
    let pts: Vec<(f64, f64)> = (start..stop).map(|k| (t[k], y[k].ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::Analysis("fitted slope is not negative".into()));
    }
    Ok(TailFit {
        lifetime: -1.0 / slope,
        t_start: t[start],
        t_stop: t[stop - 1],
        points: pts.len(),
    })
}

/// Time for the signal to fall from its maximum to `1/e` of it.
pub fn one_over_e_time(t: &[f64], y: &[f64]) -> Result<f64> {
    let (imax, &top) = y
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Analysis("empty trace".into()))?;
    let level = top / std::f64::consts::E;
    for k in imax + 1..y.len() {
        if y[k] < level {
            let tc = t[k - 1] + (y[k - 1] - level) / (y[k - 1] - y[k]) * (t[k] - t[k - 1]);
            return Ok(tc - t[imax]);
        }
    }
    Err(Error::Analysis("signal never falls to 1/e of its maximum".into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t_end: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|i| t_end * i as f64 / n as f64).collect()
    }

    #[test]
    fn parabolic_refinement_is_exact_for_parabolas() {
        let x = grid(2.0, 20);
        let y: Vec<f64> = x.iter().map(|v| 3.0 - (v - 1.013).powi(2)).collect();
        let p = find_peaks(&x, &y, 0.5);
        assert_eq!(p.len(), 1);
        assert!((p[0].0 - 1.013).abs() < 1e-12 && (p[0].1 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn fwhm_of_lorentzian() {
        let x: Vec<f64> = (0..=4000).map(|i| -2.0 + 1e-3 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 1.0 / (v * v + 0.01)).collect();
        assert!((fwhm(&x, &y).unwrap() - 0.2).abs() < 1e-5);
    }

    #[test]
    fn exponential_delay_of_a_step_is_exact() {
        // step switched on at t = 0 (linear ramp over the first sample)
        let t = grid(100.0, 1000);
        let x: Vec<f64> = t.iter().map(|v| if *v > 0.0 { 1.0 } else { 0.0 }).collect();
        let y = exponential_delay_average(&t, &x, 10.0).unwrap();
        for (tk, yk) in t.iter().zip(&y).skip(1) {
            // exact response to the ramp from 0 to 1 on [0, h]
            let h = 0.1;
            let ramp_end = 1.0 - 10.0 / h * (1.0 - (-h / 10.0f64).exp());
            let oracle = 1.0 - (1.0 - ramp_end) * (-(tk - h) / 10.0).exp();
            assert!((yk - oracle).abs() < 1e-12, "t = {tk}");
        }
    }

    #[test]
    fn exponential_delay_preserves_area() {
        let t = grid(400.0, 4000);
        let x: Vec<f64> = t.iter().map(|v| v * (-v / 17.0).exp()).collect();
        let y = exponential_delay_average(&t, &x, 10.0).unwrap();
        let sum = |v: &[f64]| v.iter().sum::<f64>();
        assert!((sum(&x) - sum(&y)).abs() < 1e-6 * sum(&x));
    }

    #[test]
    fn gaussian_blur_preserves_area() {
        let t = grid(100.0, 1000);
        let x: Vec<f64> = t.iter().map(|v| (-(v - 3.0).powi(2)).exp() + 0.1).collect();
        let y = gaussian_blur(&t, &x, 3.0).unwrap();
        let sum = |v: &[f64]| v.iter().sum::<f64>();
        assert!((sum(&x) - sum(&y)).abs() <= 1e-12 * sum(&x));
    }

    #[test]
    fn gaussian_blur_of_gaussian_adds_in_quadrature() {
        let t = grid(200.0, 4000);
        let s0 = 4.0;
        let x: Vec<f64> = t.iter().map(|v| (-0.5 * ((v - 100.0) / s0).powi(2)).exp()).collect();
        let f = 3.0;
        let s1 = f / (2.0 * (2.0f64.ln() * 2.0).sqrt());
        let y = gaussian_blur(&t, &x, f).unwrap();
        let width = fwhm(&t, &y).unwrap();
        let expect = 2.0 * (2.0 * 2.0f64.ln()).sqrt() * (s0 * s0 + s1 * s1).sqrt();
        assert!((width - expect).abs() < 1e-3, "{width} vs {expect}");
    }

    #[test]
    fn tail_fit_recovers_lifetime() {
        let t = grid(500.0, 5000);
        let y: Vec<f64> = t.iter().map(|v| (1.0 - (-v / 5.0).exp()) * (-v / 40.0).exp()).collect();
        let fit = fit_exponential_tail(&t, &y, 0.0).unwrap();
        assert!((fit.lifetime - 40.0).abs() < 1.0, "{fit:?}");
        let e = one_over_e_time(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 0.5, 0.0]).unwrap();
        assert!((e - (1.0 + (0.5 - 1.0 / std::f64::consts::E) / 0.5)).abs() < 1e-12);
    }

    #[test]
    fn tail_fit_rejects_non_decaying_trace() {
        let t = grid(10.0, 100);
        let y = vec![1.0; t.len()];
        assert!(fit_exponential_tail(&t, &y, 0.0).is_err());
    }
}
