use std::f64::consts::PI;

use serde::Serialize;

use super::{evolve_free, propagate, EvolutionConfig, EvolutionTrace, Splitting};
use crate::error::{Error, Result};
use crate::grid::SpectralField;
use crate::operators::{HybridOperatorSet, Potential};
use crate::special::digamma;
use crate::states::spectral_weights;
use crate::symbols::HybridParams;
use crate::uncertainty::energy_moments;

/// Fidelity below which the state counts as orthogonalized.
pub const FIDELITY_THRESHOLD: f64 = 1e-3;

/// Slack on the pointwise Mandelstam-Tamm check.
const MT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QslReport {
    pub delta_h: f64,
    pub var_k: f64,
    pub var_v: f64,
    pub cov_kv: f64,
    pub mean_h: f64,
    /// Relative gap between `var_k + var_v + 2 cov_kv` and `<H^2> - <H>^2`.
    pub identity_gap: f64,
    pub mt_bound: f64,
    /// `min V`, a lower bound on the ground energy since `min E(k) = 0`.
    pub e0: f64,
    pub ml_mean_energy: f64,
    pub ml_bound: f64,
    pub t_perp_measured: Option<f64>,
    /// Fidelity at the refined minimum.
    pub fidelity_at_min: Option<f64>,
    pub mt_integral_ok: bool,
}

/// `(pi m sigma^2 / hbar)[1 + eps^2 hbar^2/(24 m^2 sigma^4) - (delta/4) psi(3/2 + m^2 sigma^4 / hbar^2)]`.
pub fn ml_gaussian_prediction(params: &HybridParams, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::config("state.sigma", "must be positive"));
    }
    let (m, h, e, d) = (params.mass, params.hbar, params.eps(), params.delta());
    let s2 = sigma * sigma;
    let s4 = s2 * s2;
    let lead = PI * m * s2 / h;
    Ok(lead
        * (1.0 + e * e * h * h / (24.0 * m * m * s4)
            - 0.25 * d * digamma(1.5 + m * m * s4 / (h * h))))
}

/// Speed-limit diagnostics for an evolution recorded by [`super::evolve`].
///
/// The first local minimum of the recorded fidelity is refined by a
/// golden-section search on the exact (free) or re-propagated (Strang)
/// fidelity; it counts as orthogonalization when it falls below
/// `fid_threshold`.
pub fn qsl_report(
    psi0: &SpectralField,
    ops: &HybridOperatorSet,
    potential: Option<&Potential>,
    cfg: &EvolutionConfig,
    trace: &EvolutionTrace,
    fid_threshold: f64,
) -> Result<QslReport> {
    if trace.is_empty() || trace.fidelity[0] < 1.0 - 1e-9 {
        return Err(Error::Precondition(
            "trace does not start from the given state".into(),
        ));
    }
    let hbar = ops.params().hbar;
    let potential = potential.filter(|v| !v.is_zero());
    let w = spectral_weights(psi0);
    let ek: f64 = w.iter().zip(ops.kinetic_sym()).map(|(w, e)| w * e).sum();
    let ek2: f64 = w
        .iter()
        .zip(ops.kinetic_sym())
        .map(|(w, e)| w * e * e)
        .sum();
    let var_k = (ek2 - ek * ek).max(0.0);
    let (var_v, cov_kv, ev, e0) = match potential {
        Some(v) => {
            let n2 = psi0.norm_sqr();
            let dx = psi0.grid().dx();
            let (mut m1, mut m2) = (0.0, 0.0);
            for (c, s) in psi0.values().iter().zip(v.samples()) {
                m1 += c.norm_sqr() * s;
                m2 += c.norm_sqr() * s * s;
            }
            let (m1, m2) = (m1 * dx / n2, m2 * dx / n2);
            let kpsi = ops.apply_kinetic(psi0)?;
            let vpsi = psi0.multiply_pointwise(v.samples())?;
            let sym = kpsi.inner(&vpsi)?.re / n2;
            ((m2 - m1 * m1).max(0.0), sym - ek * m1, m1, v.lower_bound())
        }
        None => (0.0, 0.0, 0.0, 0.0),
    };
    let var_h = var_k + var_v + 2.0 * cov_kv;
    let (mean_h, direct) = energy_moments(psi0, ops, potential)?;
    let identity_gap = (var_h - direct).abs() / direct.max(f64::MIN_POSITIVE);
    let delta_h = var_h.max(0.0).sqrt();
    let mt_bound = PI * hbar / (2.0 * delta_h);
    let ml_mean_energy = ek + ev - e0;
    let mt_integral_ok = trace
        .times
        .iter()
        .zip(&trace.bures_angle)
        .all(|(t, b)| *b <= delta_h * t / hbar + MT_SLACK);

    let mut t_perp = None;
    let mut fid_min = None;
    if let Some(i) = first_local_minimum(&trace.fidelity) {
        let lo = trace.times[i - 1];
        let hi = trace.times[(i + 1).min(trace.len() - 1)];
        let fidelity_at = |t: f64| -> Result<f64> {
            let psi = match cfg.splitting {
                Splitting::ExactFree => evolve_free(psi0, ops, t)?,
                Splitting::Strang => {
                    let n = ((t / cfg.dt).round() as usize).max(1);
                    propagate(psi0, ops, potential, t / n as f64, n, Splitting::Strang)?
                }
            };
            Ok(psi0.inner(&psi)?.norm() / psi.norm())
        };
        let (t, f) = golden_minimum(fidelity_at, lo, hi)?;
        fid_min = Some(f);
        if f <= fid_threshold {
            t_perp = Some(t);
        }
    }

    Ok(QslReport {
        delta_h,
        var_k,
        var_v,
        cov_kv,
        mean_h,
        identity_gap,
        mt_bound,
        e0,
        ml_mean_energy,
        ml_bound: PI * hbar / (2.0 * ml_mean_energy),
        t_perp_measured: t_perp,
        fidelity_at_min: fid_min,
        mt_integral_ok,
    })
}

fn first_local_minimum(f: &[f64]) -> Option<usize> {
    (1..f.len().saturating_sub(1)).find(|&i| f[i] <= f[i - 1] && f[i] < f[i + 1])
}

/// Golden-section search for the minimum of a unimodal function on `[a, b]`.
fn golden_minimum(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    while (b - a).abs() > 1e-13 * b.abs().max(1.0) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    let t = 0.5 * (a + b);
    Ok((t, f(t)?))
}
