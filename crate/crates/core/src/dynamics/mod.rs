//! Time evolution under the hybrid Hamiltonian and what it is used to test.

mod autocorr;
mod ehrenfest;
mod propagator;
mod qsl;

pub use autocorr::{autocorr_model, fit_autocorrelation, AutocorrFit};
pub use ehrenfest::{ehrenfest_check, momentum_force_check, EhrenfestReport};
pub use propagator::{propagator_slice, tail_slope, TailFit};
pub use qsl::{ml_gaussian_prediction, qsl_report, QslReport, FIDELITY_THRESHOLD};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::SpectralField;
use crate::operators::{HybridOperatorSet, Potential};
use crate::uncertainty::energy_moments;

/// Norm drift at which an evolution aborts.
pub const NORM_ABORT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    /// One diagonal phase per record point; free evolution only.
    ExactFree,
    /// Half potential, full kinetic, half potential per step.
    Strang,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub record_every: usize,
    pub splitting: Splitting,
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::config(
                "evolution.dt",
                format!("{} must be positive", self.dt),
            ));
        }
        if self.n_steps == 0 {
            return Err(Error::config("evolution.n_steps", "must be positive"));
        }
        if self.record_every == 0 {
            return Err(Error::config("evolution.record_every", "must be positive"));
        }
        Ok(())
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.n_steps as f64
    }
}

/// Observables recorded along an evolution.
#[derive(Debug, Clone)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    /// `|<psi_0|psi(t)>|`.
    pub fidelity: Vec<f64>,
    pub bures_angle: Vec<f64>,
    pub mean_x: Vec<f64>,
    pub var_x: Vec<f64>,
    /// `<dE/d(hbar k)>`.
    pub mean_vg: Vec<f64>,
    /// `<Pi(k)>`.
    pub mean_p_hybrid: Vec<f64>,
    /// `<(i/hbar)[V, p]>`; zero without a potential.
    pub mean_force: Vec<f64>,
    pub energy_mean: Vec<f64>,
    pub energy_var: Vec<f64>,
    pub norm: Vec<f64>,
    /// `fidelity^2`.
    pub autocorr: Vec<f64>,
    pub final_state: SpectralField,
}

impl EvolutionTrace {
    fn new(psi: &SpectralField) -> Self {
        EvolutionTrace {
            times: vec![],
            fidelity: vec![],
            bures_angle: vec![],
            mean_x: vec![],
            var_x: vec![],
            mean_vg: vec![],
            mean_p_hybrid: vec![],
            mean_force: vec![],
            energy_mean: vec![],
            energy_var: vec![],
            norm: vec![],
            autocorr: vec![],
            final_state: psi.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    fn record(
        &mut self,
        t: f64,
        psi0: &SpectralField,
        psi: &SpectralField,
        ops: &HybridOperatorSet,
        potential: Option<&Potential>,
    ) -> Result<()> {
        let n2 = psi.norm_sqr();
        let fid = (psi0.inner(psi)?.norm() / n2.sqrt()).min(1.0);
        let dx = psi.grid().dx();
        let density: Vec<f64> = psi
            .values()
            .iter()
            .map(|c| c.norm_sqr() * dx / n2)
            .collect();
        let xs = psi.grid().x_values();
        let mx: f64 = density.iter().zip(xs).map(|(d, x)| d * x).sum();
        let vx: f64 = density
            .iter()
            .zip(xs)
            .map(|(d, x)| d * (x - mx).powi(2))
            .sum();
        let (e, ev) = energy_moments(psi, ops, potential)?;
        let force = match potential {
            Some(v) if !v.is_zero() => psi.inner(&ops.force_field(v, psi)?)?.re / n2,
            _ => 0.0,
        };
        self.times.push(t);
        self.fidelity.push(fid);
        self.bures_angle.push(fid.acos());
        self.mean_x.push(mx);
        self.var_x.push(vx);
        self.mean_vg.push(ops.mean_velocity(psi)?);
        self.mean_p_hybrid.push(ops.mean_momentum(psi)?);
        self.mean_force.push(force);
        self.energy_mean.push(e);
        self.energy_var.push(ev);
        self.norm.push(n2.sqrt());
        self.autocorr.push(fid * fid);
        Ok(())
    }
}

fn phases(symbol: &[f64], scale: f64) -> Vec<Complex64> {
    symbol
        .iter()
        .map(|&s| Complex64::from_polar(1.0, -s * scale))
        .collect()
}

fn check_norm(t: f64, psi: &SpectralField) -> Result<()> {
    let drift = (psi.norm() - 1.0).abs();
    if drift > NORM_ABORT {
        return Err(Error::NormDrift { time: t, drift });
    }
    Ok(())
}

fn active(potential: Option<&Potential>) -> Option<&Potential> {
    potential.filter(|v| !v.is_zero())
}

/// Exact free evolution to time `t`.
pub fn evolve_free(psi: &SpectralField, ops: &HybridOperatorSet, t: f64) -> Result<SpectralField> {
    psi.apply_complex_multiplier(&phases(ops.kinetic_sym(), t / ops.params().hbar))
}

/// Strang stepper with precomputed phases.
pub struct StrangStepper {
    half_v: Vec<f64>,
    kinetic: Vec<Complex64>,
}

impl StrangStepper {
    pub fn new(ops: &HybridOperatorSet, potential: Option<&Potential>, dt: f64) -> Self {
        let hbar = ops.params().hbar;
        let half_v = match active(potential) {
            Some(v) => v.samples().iter().map(|&s| -0.5 * s * dt / hbar).collect(),
            None => vec![0.0; ops.grid().len()],
        };
        StrangStepper {
            half_v,
            kinetic: phases(ops.kinetic_sym(), dt / hbar),
        }
    }

    pub fn step(&self, psi: &SpectralField, n: usize) -> Result<SpectralField> {
        let grid = psi.grid().clone();
        let mut values = psi.values().to_vec();
        let half: Vec<Complex64> = self
            .half_v
            .iter()
            .map(|&a| Complex64::from_polar(1.0, a))
            .collect();
        let full: Vec<Complex64> = half.iter().map(|h| h * h).collect();
        for (c, h) in values.iter_mut().zip(&half) {
            *c *= h;
        }
        for i in 0..n {
            let mut spec = grid.forward(&values);
            for (c, k) in spec.iter_mut().zip(&self.kinetic) {
                *c *= k;
            }
            values = grid.inverse(&spec);
            // Adjacent half-potential factors merge into one full factor.
            let factor = if i + 1 == n { &half } else { &full };
            for (c, h) in values.iter_mut().zip(factor) {
                *c *= h;
            }
        }
        SpectralField::from_position(grid, values)
    }
}

/// Propagates `psi` through `n_steps` of size `dt`.
pub fn propagate(
    psi: &SpectralField,
    ops: &HybridOperatorSet,
    potential: Option<&Potential>,
    dt: f64,
    n_steps: usize,
    splitting: Splitting,
) -> Result<SpectralField> {
    match splitting {
        Splitting::ExactFree => {
            if active(potential).is_some() {
                return Err(Error::config(
                    "evolution.splitting",
                    "exact_free requires a zero potential",
                ));
            }
            evolve_free(psi, ops, dt * n_steps as f64)
        }
        Splitting::Strang => StrangStepper::new(ops, potential, dt).step(psi, n_steps),
    }
}

/// Evolves `psi0` and records observables every `record_every` steps,
/// including `t = 0`.
pub fn evolve(
    psi0: &SpectralField,
    ops: &HybridOperatorSet,
    potential: Option<&Potential>,
    cfg: &EvolutionConfig,
) -> Result<EvolutionTrace> {
    cfg.validate()?;
    if cfg.splitting == Splitting::ExactFree && active(potential).is_some() {
        return Err(Error::config(
            "evolution.splitting",
            "exact_free requires a zero potential",
        ));
    }
    let potential = active(potential);
    let mut trace = EvolutionTrace::new(psi0);
    trace.record(0.0, psi0, psi0, ops, potential)?;
    let stepper = StrangStepper::new(ops, potential, cfg.dt);
    let mut psi = psi0.clone();
    let mut step = 0;
    while step < cfg.n_steps {
        let n = cfg.record_every.min(cfg.n_steps - step);
        step += n;
        let t = step as f64 * cfg.dt;
        psi = match cfg.splitting {
            Splitting::ExactFree => evolve_free(psi0, ops, t)?,
            Splitting::Strang => stepper.step(&psi, n)?,
        };
        check_norm(t, &psi)?;
        trace.record(t, psi0, &psi, ops, potential)?;
    }
    trace.final_state = psi;
    Ok(trace)
}

/// Terminal-state errors of Strang runs at `dt`, `dt/2` against a `dt/8`
/// reference, and their ratio (4 for a second-order scheme).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrangOrder {
    pub error_dt: f64,
    pub error_half: f64,
    pub ratio: f64,
}

pub fn strang_order(
    psi0: &SpectralField,
    ops: &HybridOperatorSet,
    potential: &Potential,
    dt: f64,
    t_final: f64,
) -> Result<StrangOrder> {
    let n = (t_final / dt).round() as usize;
    let run = |m: usize| {
        propagate(
            psi0,
            ops,
            Some(potential),
            t_final / m as f64,
            m,
            Splitting::Strang,
        )
    };
    let reference = run(8 * n)?;
    let e1 = run(n)?.sub(&reference)?.norm();
    let e2 = run(2 * n)?.sub(&reference)?.norm();
    Ok(StrangOrder {
        error_dt: e1,
        error_half: e2,
        ratio: e1 / e2,
    })
}
