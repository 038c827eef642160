use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use hybridqm::dynamics::{
    ehrenfest_check, fit_autocorrelation, momentum_force_check, propagator_slice, qsl_report,
    EhrenfestReport, FIDELITY_THRESHOLD,
};
use hybridqm::states::spectral_weights;
use hybridqm::uncertainty::{energy_moments, limiting_case_suite};
use hybridqm::{
    build_operators, evolve, exact_bound, gaussian, make_grid, moments, two_mode_superposition,
    Grid1D, HybridParams, Potential, SpectralField, WaveFunction,
};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{
    self, Analysis, LoadedConfig, PRef, PotentialConfig, ScenarioConfig, StateConfig, SweepAxis,
};
use crate::failure::Failure;
use crate::output::RunDirectory;

pub struct RunOptions {
    pub out: Option<PathBuf>,
    pub override_flags: bool,
}

#[derive(Debug, Clone, Serialize)]
struct Flag {
    name: String,
    set: bool,
    /// Blocking flags turn a successful run into exit code 4 unless overridden.
    blocking: bool,
    detail: String,
}

#[derive(Debug, Serialize)]
struct Manifest {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    config_sha256: String,
    files: Vec<String>,
    flags: Vec<Flag>,
    override_flags: bool,
}

#[derive(Debug, Serialize)]
struct EhrenfestOutput {
    position: EhrenfestReport,
    momentum: EhrenfestReport,
}

struct Flags(Vec<Flag>);

impl Flags {
    fn push(&mut self, name: &str, set: bool, blocking: bool, detail: String) {
        self.0.push(Flag {
            name: name.to_string(),
            set,
            blocking,
            detail,
        });
    }

    fn blocking(&self) -> Vec<String> {
        self.0
            .iter()
            .filter(|f| f.set && f.blocking)
            .map(|f| f.name.clone())
            .collect()
    }
}

/// Caps sweep parallelism at `HYBRIDQM_THREADS` when set.
fn thread_pool() -> Result<rayon::ThreadPool, Failure> {
    let threads = match std::env::var("HYBRIDQM_THREADS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| {
                Failure::config(
                    "HYBRIDQM_THREADS",
                    format!("`{s}` is not a positive integer"),
                )
            })?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::config("HYBRIDQM_THREADS", e.to_string()))
}

fn build_state(
    state: &StateConfig,
    grid: &std::sync::Arc<Grid1D>,
) -> Result<WaveFunction, Failure> {
    Ok(match *state {
        StateConfig::Gaussian {
            center_x,
            center_k,
            sigma,
        } => gaussian(grid, center_x, center_k, sigma)?,
        StateConfig::TwoMode {
            k1_index,
            k2_index,
            phase,
        } => two_mode_superposition(grid, k1_index, k2_index, phase)?,
    })
}

fn build_potential(
    cfg: &ScenarioConfig,
    grid: &Grid1D,
    base_dir: &Path,
) -> Result<Option<Potential>, Failure> {
    Ok(match &cfg.potential {
        PotentialConfig::None => None,
        PotentialConfig::Harmonic { omega } => {
            Some(Potential::harmonic(grid, *omega, cfg.params.mass)?)
        }
        PotentialConfig::Quartic { lambda } => Some(Potential::quartic(grid, *lambda)?),
        PotentialConfig::Well { depth, width } => Some(Potential::well(grid, *depth, *width)?),
        PotentialConfig::Table { file } => {
            let (xs, vs) = config::read_table(&base_dir.join(file))?;
            Some(Potential::from_table(grid, &xs, &vs)?)
        }
    })
}

fn resolve_p_ref(p_ref: PRef, psi: &SpectralField, params: &HybridParams) -> Result<f64, Failure> {
    Ok(match p_ref {
        PRef::Value(v) => v,
        PRef::Keyword(_) => {
            let dp = moments(psi, params, params.hbar)?.dp_std();
            if dp > 0.0 {
                dp
            } else {
                params.hbar
            }
        }
    })
}

struct SweepRow {
    value: f64,
    params: HybridParams,
    product: f64,
    exact_bound: f64,
    delta_k: f64,
    mt_bound: f64,
}

fn sweep_row(
    cfg: &ScenarioConfig,
    grid: &std::sync::Arc<Grid1D>,
    psi: &SpectralField,
    potential: Option<&Potential>,
    p_ref: f64,
    value: f64,
    axis: SweepAxis,
) -> hybridqm::Result<SweepRow> {
    let params = cfg.swept(axis, value);
    let ops = build_operators(&params, grid)?;
    let report = exact_bound(psi, &ops, p_ref)?;
    let w = spectral_weights(psi);
    let ek: f64 = w.iter().zip(ops.kinetic_sym()).map(|(w, e)| w * e).sum();
    let ek2: f64 = w
        .iter()
        .zip(ops.kinetic_sym())
        .map(|(w, e)| w * e * e)
        .sum();
    let (_, var_h) = energy_moments(psi, &ops, potential)?;
    Ok(SweepRow {
        value,
        params,
        product: report.product,
        exact_bound: report.exact_bound,
        delta_k: (ek2 - ek * ek).max(0.0).sqrt(),
        mt_bound: PI * params.hbar / (2.0 * var_h.sqrt()),
    })
}

/// Runs a scenario and writes its artifacts.
pub fn run(config_path: &Path, opts: &RunOptions) -> Result<(), Failure> {
    let LoadedConfig {
        config: cfg,
        base_dir,
        raw,
    } = config::load(config_path)?;
    let pool = thread_pool()?;
    let params = cfg.params;
    let grid = make_grid(cfg.grid.n_points, cfg.grid.x_min, cfg.grid.x_max)?;
    let ops = build_operators(&params, &grid)?;
    let psi = build_state(&cfg.state, &grid)?;
    let potential = build_potential(&cfg, &grid, &base_dir)?;
    let potential = potential.as_ref();
    let p_ref = resolve_p_ref(cfg.p_ref, &psi, &params)?;
    let localized = matches!(cfg.state, StateConfig::Gaussian { .. });

    let out_dir = match &opts.out {
        Some(d) => d.clone(),
        None => base_dir.join(&cfg.output.directory),
    };
    let mut out = RunDirectory::open(&out_dir, cfg.output.format)?;
    let mut flags = Flags(vec![]);

    let trace = match &cfg.evolution {
        Some(evo) => {
            let tr = evolve(&psi, &ops, potential, evo)?;
            out.write_table(
                "trace",
                &[
                    ("t", &tr.times),
                    ("fidelity", &tr.fidelity),
                    ("bures_angle", &tr.bures_angle),
                    ("mean_x", &tr.mean_x),
                    ("mean_vg", &tr.mean_vg),
                    ("energy_mean", &tr.energy_mean),
                    ("energy_var", &tr.energy_var),
                    ("norm", &tr.norm),
                    ("autocorr", &tr.autocorr),
                ],
            )?;
            let leak = tr.final_state.boundary_leak();
            flags.push(
                "evolution.final_state_leaks",
                localized && tr.final_state.leaks(),
                true,
                format!("edge amplitude / peak = {leak:.3e}"),
            );
            Some((*evo, tr))
        }
        None => None,
    };

    for (i, analysis) in cfg.analysis.iter().enumerate() {
        match analysis {
            Analysis::Uncertainty => {
                let r = exact_bound(&psi, &ops, p_ref)?;
                flags.push(
                    "uncertainty.state_leaks",
                    psi.leaks(),
                    true,
                    format!("edge amplitude / peak = {:.3e}", psi.boundary_leak()),
                );
                // Log moments only feed the expansions, never the exact bound.
                flags.push(
                    "uncertainty.log_moments_unreliable",
                    !r.moments.log_reliable,
                    false,
                    format!("weight in the k = 0 bin {:.3e}", r.moments.pole_weight),
                );
                flags.push(
                    "uncertainty.expansion_out_of_regime",
                    r.expanded.iter().any(|e| !e.in_regime),
                    false,
                    format!("eps = {:.4}, delta = {:.4}", params.eps(), params.delta()),
                );
                flags.push(
                    "uncertainty.slack_negative",
                    !r.holds(),
                    false,
                    format!("slack = {:.3e}", r.slack),
                );
                out.write_json("uncertainty.json", &r)?;
            }
            Analysis::Qsl => {
                let (evo, tr) = trace.as_ref().expect("checked at load");
                let r = qsl_report(&psi, &ops, potential, evo, tr, FIDELITY_THRESHOLD)?;
                flags.push(
                    "qsl.not_orthogonalized",
                    r.t_perp_measured.is_none(),
                    false,
                    format!("smallest refined fidelity {:?}", r.fidelity_at_min),
                );
                flags.push(
                    "qsl.mt_integral_violated",
                    !r.mt_integral_ok,
                    false,
                    String::new(),
                );
                out.write_json("qsl.json", &r)?;
            }
            Analysis::Ehrenfest => {
                let (_, tr) = trace.as_ref().expect("checked at load");
                let e = EhrenfestOutput {
                    position: ehrenfest_check(tr)?,
                    momentum: momentum_force_check(tr)?,
                };
                flags.push(
                    "ehrenfest.residual_above_tolerance",
                    !(e.position.pass && e.momentum.pass),
                    false,
                    format!(
                        "{:.3e} / {:.3e}",
                        e.position.max_residual, e.momentum.max_residual
                    ),
                );
                out.write_json("ehrenfest.json", &e)?;
            }
            Analysis::AutocorrFit => {
                let (_, tr) = trace.as_ref().expect("checked at load");
                let f = fit_autocorrelation(&tr.times, &tr.autocorr)?;
                flags.push("autocorr_fit.degenerate", f.degenerate, true, String::new());
                flags.push(
                    "autocorr_fit.low_confidence",
                    f.low_confidence && !f.degenerate,
                    true,
                    format!(
                        "residual {:.3e}; span covers {:.2} periods",
                        f.residual,
                        tr.times.last().unwrap_or(&0.0) * f.omega_q / (2.0 * PI)
                    ),
                );
                flags.push(
                    "autocorr_fit.omega_unidentifiable",
                    !f.omega_identifiable,
                    false,
                    String::new(),
                );
                out.write_json("fit.json", &f)?;
            }
            Analysis::LimitsSuite => {
                let table = limiting_case_suite(&params)?;
                let failing: Vec<&str> = table
                    .rows
                    .iter()
                    .filter(|r| !r.pass)
                    .map(|r| r.case)
                    .collect();
                flags.push(
                    "limits_suite.failing_cases",
                    !failing.is_empty(),
                    false,
                    failing.join(","),
                );
                out.write_json("limits.json", &table)?;
            }
            Analysis::Propagator => {
                let t = cfg.evolution.map_or(1.0, |e| e.duration());
                let src = match cfg.state {
                    StateConfig::Gaussian { center_x, .. } => grid.nearest_index(center_x),
                    StateConfig::TwoMode { .. } => grid.len() / 2,
                };
                let g = propagator_slice(&ops, t, src)?;
                let re: Vec<f64> = g.iter().map(|c| c.re).collect();
                let im: Vec<f64> = g.iter().map(|c| c.im).collect();
                let abs: Vec<f64> = g.iter().map(|c| c.norm()).collect();
                out.write_table(
                    "propagator",
                    &[
                        ("x", grid.x_values()),
                        ("re", &re),
                        ("im", &im),
                        ("abs", &abs),
                    ],
                )?;
            }
            Analysis::Sweep { axis, values } => {
                let rows: Vec<SweepRow> = pool.install(|| {
                    values
                        .par_iter()
                        .enumerate()
                        .map(|(j, &v)| {
                            sweep_row(&cfg, &grid, &psi, potential, p_ref, v, *axis).map_err(|e| {
                                Failure::config(
                                    format!("analysis[{i}].sweep.values[{j}]"),
                                    e.to_string(),
                                )
                            })
                        })
                        .collect::<Result<_, _>>()
                })?;
                let col = |f: fn(&SweepRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
                out.write_table(
                    "sweep",
                    &[
                        ("value", &col(|r| r.value)),
                        ("q", &col(|r| r.params.q)),
                        ("alpha", &col(|r| r.params.alpha)),
                        ("product", &col(|r| r.product)),
                        ("exact_bound", &col(|r| r.exact_bound)),
                        ("delta_k", &col(|r| r.delta_k)),
                        ("mt_bound", &col(|r| r.mt_bound)),
                    ],
                )?;
            }
        }
    }

    let blocking = flags.blocking();
    let manifest = Manifest {
        schema_version: config::SCHEMA_VERSION,
        tool: "hybridqm",
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: hex::encode(Sha256::digest(&raw)),
        files: out.written.clone(),
        flags: flags.0,
        override_flags: opts.override_flags,
    };
    out.write_json("manifest.json", &manifest)?;
    if !blocking.is_empty() && !opts.override_flags {
        return Err(Failure::Unreliable(blocking));
    }
    Ok(())
}
