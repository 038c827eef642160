use nalgebra::{Matrix4, Vector4};
use serde::Serialize;

use crate::error::{Error, Result};

/// Amplitude below which the oscillation frequency is reported unidentifiable.
const MIN_IDENTIFIABLE_C: f64 = 1e-3;

/// Relative RMS residual above which a fit is reported low-confidence.
const MAX_CONFIDENT_RESIDUAL: f64 = 1e-2;

/// Number of periodogram peaks used as frequency starts.
const FREQUENCY_STARTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AutocorrFit {
    pub gamma: f64,
    pub alpha_fit: f64,
    pub c_q: f64,
    pub omega_q: f64,
    /// RMS residual relative to the RMS of the data.
    pub residual: f64,
    /// The series is flat; nothing was fitted.
    pub degenerate: bool,
    /// False when the oscillation amplitude vanishes and `omega_q` is arbitrary.
    pub omega_identifiable: bool,
    /// The data span fewer than three periods of an identifiable `omega_q`,
    /// or the relative residual exceeds 1%.
    pub low_confidence: bool,
}

/// `exp(-gamma t^alpha) (1 + c cos(omega t))`.
pub fn autocorr_model(t: f64, gamma: f64, alpha: f64, c: f64, omega: f64) -> f64 {
    (-gamma * t.powf(alpha)).exp() * (1.0 + c * (omega * t).cos())
}

fn clamp(p: Vector4<f64>) -> Vector4<f64> {
    Vector4::new(
        p[0].max(0.0),
        p[1].clamp(1e-3, 3.0),
        p[2].clamp(-1.0, 1.0),
        p[3].max(0.0),
    )
}

fn cost(times: &[f64], data: &[f64], p: &Vector4<f64>) -> f64 {
    times
        .iter()
        .zip(data)
        .map(|(&t, &a)| (autocorr_model(t, p[0], p[1], p[2], p[3]) - a).powi(2))
        .sum()
}

/// Projected Levenberg-Marquardt from one starting point.
fn levenberg_marquardt(times: &[f64], data: &[f64], start: Vector4<f64>) -> (Vector4<f64>, f64) {
    let mut p = clamp(start);
    let mut c = cost(times, data, &p);
    let mut mu = 1e-3;
    for _ in 0..500 {
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for (&t, &a) in times.iter().zip(data) {
            let tp = if t > 0.0 { t.powf(p[1]) } else { 0.0 };
            let lt = if t > 0.0 { t.ln() } else { 0.0 };
            let env = (-p[0] * tp).exp();
            let (s, co) = (p[3] * t).sin_cos();
            let model = env * (1.0 + p[2] * co);
            let j = Vector4::new(
                -tp * model,
                -p[0] * tp * lt * model,
                env * co,
                -env * p[2] * t * s,
            );
            jtj += j * j.transpose();
            jtr += j * (model - a);
        }
        let mut improved = false;
        while mu < 1e12 {
            let mut lhs = jtj;
            for i in 0..4 {
                lhs[(i, i)] += mu * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = lhs.cholesky().map(|ch| ch.solve(&jtr)) else {
                mu *= 10.0;
                continue;
            };
            let trial = clamp(p - step);
            let ct = cost(times, data, &trial);
            if ct < c {
                let rel = (c - ct) / c.max(f64::MIN_POSITIVE);
                p = trial;
                c = ct;
                mu = (mu / 3.0).max(1e-12);
                improved = rel > 1e-15;
                break;
            }
            mu *= 4.0;
        }
        if !improved {
            break;
        }
    }
    (p, c)
}

/// Least-squares slope and intercept.
fn line_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Peaks of `|sum_i d_i e^{-i w t_i}|` over `0 < w <= pi / mean spacing`.
fn periodogram_peaks(times: &[f64], d: &[f64], count: usize) -> Vec<f64> {
    let span = times[times.len() - 1] - times[0];
    let w_max = std::f64::consts::PI * (times.len() - 1) as f64 / span;
    let n_w = 8192;
    let power: Vec<(f64, f64)> = (1..=n_w)
        .map(|i| {
            let w = w_max * i as f64 / n_w as f64;
            let (mut re, mut im) = (0.0, 0.0);
            for (&t, &v) in times.iter().zip(d) {
                let (s, c) = (w * t).sin_cos();
                re += v * c;
                im -= v * s;
            }
            (w, re * re + im * im)
        })
        .collect();
    let mut peaks: Vec<(f64, f64)> = (1..power.len() - 1)
        .filter(|&i| power[i].1 > power[i - 1].1 && power[i].1 >= power[i + 1].1)
        .map(|i| power[i])
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1));
    peaks.into_iter().take(count).map(|p| p.0).collect()
}

/// Fits `A(t) ~ exp(-gamma t^alpha)(1 + c cos(omega t))`.
///
/// Starts: `gamma` and `alpha` from a regression of `ln(-ln A)` on `ln t`;
/// `omega` from the largest periodogram peaks of `A` minus that trend; `c`
/// by linear least squares given the rest. The best local fit wins.
pub fn fit_autocorrelation(times: &[f64], values: &[f64]) -> Result<AutocorrFit> {
    if times.len() != values.len() {
        return Err(Error::Shape {
            expected: times.len(),
            got: values.len(),
        });
    }
    if times.len() < 8 {
        return Err(Error::Precondition(
            "autocorrelation fit needs at least 8 samples".into(),
        ));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("sample times must increase".into()));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    if hi - lo <= 1e-9 * hi.abs().max(1e-300) {
        return Ok(AutocorrFit {
            gamma: 0.0,
            alpha_fit: 1.0,
            c_q: 0.0,
            omega_q: 0.0,
            residual: 0.0,
            degenerate: true,
            omega_identifiable: false,
            low_confidence: true,
        });
    }

    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(values)
        .filter(|(&t, &a)| t > 0.0 && a > 1e-12 && a < 1.0 - 1e-12)
        .map(|(&t, &a)| (t.ln(), (-a.ln()).ln()))
        .collect();
    let (alpha0, gamma0) = match line_fit(&pts) {
        Some((s, c)) => (s.clamp(0.1, 3.0), c.exp()),
        None => (1.0, 0.1),
    };
    let trend: Vec<f64> = times
        .iter()
        .map(|&t| autocorr_model(t, gamma0, alpha0, 0.0, 0.0))
        .collect();
    let detrended: Vec<f64> = values.iter().zip(&trend).map(|(a, e)| a - e).collect();
    let mut omegas = periodogram_peaks(times, &detrended, FREQUENCY_STARTS);
    if omegas.is_empty() {
        omegas.push(1.0);
    }

    let mut best: Option<(Vector4<f64>, f64)> = None;
    for &w in &omegas {
        let (mut num, mut den) = (0.0, 0.0);
        for ((&t, &d), &e) in times.iter().zip(&detrended).zip(&trend) {
            let c = e * (w * t).cos();
            num += d * c;
            den += c * c;
        }
        let c0 = if den > 0.0 { num / den } else { 0.0 };
        for start in [
            Vector4::new(gamma0, alpha0, c0, w),
            Vector4::new(gamma0, alpha0, 0.5 * c0, w),
        ] {
            let (p, c) = levenberg_marquardt(times, values, start);
            if best.as_ref().is_none_or(|b| c < b.1) {
                best = Some((p, c));
            }
        }
    }
    let (p, c) = best.expect("at least one start");
    let n = times.len() as f64;
    let rms_data = (values.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
    let identifiable = p[2].abs() >= MIN_IDENTIFIABLE_C;
    let residual = (c / n).sqrt() / rms_data;
    let span = times[times.len() - 1] - times[0];
    Ok(AutocorrFit {
        gamma: p[0],
        alpha_fit: p[1],
        c_q: p[2],
        omega_q: p[3],
        residual,
        degenerate: false,
        omega_identifiable: identifiable,
        low_confidence: (identifiable && span * p[3] / (2.0 * std::f64::consts::PI) < 3.0)
            || residual > MAX_CONFIDENT_RESIDUAL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(gamma: f64, alpha: f64, c: f64, omega: f64) -> (Vec<f64>, Vec<f64>) {
        let t: Vec<f64> = (0..500).map(|i| 20.0 * i as f64 / 499.0).collect();
        let a = t
            .iter()
            .map(|&t| autocorr_model(t, gamma, alpha, c, omega))
            .collect();
        (t, a)
    }

    #[test]
    fn round_trip() {
        let (t, a) = synthetic(0.1, 1.5, 0.2, 3.0);
        let f = fit_autocorrelation(&t, &a).unwrap();
        for (got, want) in [
            (f.gamma, 0.1),
            (f.alpha_fit, 1.5),
            (f.c_q, 0.2),
            (f.omega_q, 3.0),
        ] {
            assert!((got / want - 1.0).abs() < 1e-2, "{f:?}");
        }
        assert!(f.omega_identifiable && !f.low_confidence && !f.degenerate);
    }

    #[test]
    fn pure_stretched_exponential() {
        let (t, a) = synthetic(0.1, 1.5, 0.0, 3.0);
        let f = fit_autocorrelation(&t, &a).unwrap();
        assert!(!f.omega_identifiable && !f.low_confidence, "{f:?}");
        assert!(
            (f.gamma / 0.1 - 1.0).abs() < 1e-2 && (f.alpha_fit / 1.5 - 1.0).abs() < 1e-2,
            "{f:?}"
        );
    }

    #[test]
    fn flat_series_is_degenerate() {
        let t: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let f = fit_autocorrelation(&t, &vec![1.0; 100]).unwrap();
        assert!(f.degenerate);
    }
}
