use serde::Serialize;

use super::EvolutionTrace;
use crate::error::{Error, Result};

/// Floor of the relative Ehrenfest tolerance.
pub const EHRENFEST_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EhrenfestReport {
    /// Largest `|d<A>/dt - <B>|` over the trace, relative to `max |<B>|`.
    pub max_residual: f64,
    pub scale: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Centred differences of `a` against `rate`, both sampled at `times`.
fn compare(times: &[f64], a: &[f64], rate: &[f64], dt: f64) -> Result<EhrenfestReport> {
    if times.len() < 3 {
        return Err(Error::Precondition(
            "Ehrenfest checks need at least three records".into(),
        ));
    }
    let scale = rate.iter().fold(0.0f64, |m, r| m.max(r.abs()));
    let mut worst = 0.0f64;
    for i in 1..times.len() - 1 {
        let h = times[i + 1] - times[i - 1];
        let fd = (a[i + 1] - a[i - 1]) / h;
        worst = worst.max((fd - rate[i]).abs());
    }
    let max_residual = if scale > 0.0 { worst / scale } else { worst };
    let tolerance = EHRENFEST_TOLERANCE.max(10.0 * dt * dt * scale);
    Ok(EhrenfestReport {
        max_residual,
        scale,
        tolerance,
        pass: max_residual <= tolerance,
    })
}

fn record_spacing(trace: &EvolutionTrace) -> f64 {
    if trace.len() > 1 {
        trace.times[1] - trace.times[0]
    } else {
        0.0
    }
}

/// `d<x>/dt` against `<dE/d(hbar k)>`.
pub fn ehrenfest_check(trace: &EvolutionTrace) -> Result<EhrenfestReport> {
    compare(
        &trace.times,
        &trace.mean_x,
        &trace.mean_vg,
        record_spacing(trace),
    )
}

/// `d<p>/dt` against the generalized force `<(i/hbar)[V, p]>`.
pub fn momentum_force_check(trace: &EvolutionTrace) -> Result<EhrenfestReport> {
    compare(
        &trace.times,
        &trace.mean_p_hybrid,
        &trace.mean_force,
        record_spacing(trace),
    )
}
