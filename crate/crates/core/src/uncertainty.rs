//! Generalized uncertainty bounds, energy relations and limiting cases.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expansions::{uncertainty_series, ExpansionInput, ExpansionVariant};
use crate::grid::{make_grid, Grid1D, SpectralField};
use crate::operators::{build_operators, HybridOperatorSet, Potential};
use crate::states::{gaussian, moments, spectral_weights, MomentSet};
use crate::symbols::{fractional_symbol, HybridParams};

/// Regime limit on `|eps|` and `delta` for the uncertainty expansion.
pub const EXPANSION_REGIME: f64 = 0.3;

/// Allowed negative slack of the uncertainty inequality.
pub const SLACK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpandedBound {
    pub value: f64,
    pub variant: ExpansionVariant,
    /// False when `|eps|` or `delta` exceeds 0.3.
    pub in_regime: bool,
    /// False when the log-moments feeding the series are unreliable.
    pub log_reliable: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UncertaintyReport {
    pub dx: f64,
    pub dp_hybrid: f64,
    pub product: f64,
    /// `(hbar/2) |<M(p)>|`.
    pub exact_bound: f64,
    /// The expansion variant closest to `exact_bound`.
    pub expanded_bound: f64,
    pub expanded_variant: ExpansionVariant,
    pub expanded: [ExpandedBound; 2],
    /// `product - exact_bound`.
    pub slack: f64,
    /// `(hbar/2) |<[x, p]>| / hbar`: the Robertson bound, which carries
    /// the factor `ln q / (q - 1)` on top of `exact_bound`.
    pub robertson_bound: f64,
    pub robertson_slack: f64,
    pub p_ref: f64,
    pub moments: MomentSet,
}

impl UncertaintyReport {
    pub fn holds(&self) -> bool {
        self.slack >= -SLACK_TOLERANCE
    }
}

/// `(hbar/2) |<M(p)>|` using the operator set's sampled multiplier.
pub fn commutator_bound(psi: &SpectralField, ops: &HybridOperatorSet) -> Result<f64> {
    Ok(0.5 * ops.params().hbar * ops.spectral_mean(psi, ops.m_symbol())?.abs())
}

pub fn expanded_bound(
    m: &MomentSet,
    params: &HybridParams,
    variant: ExpansionVariant,
) -> ExpandedBound {
    let inp = ExpansionInput::new(params, *m);
    ExpandedBound {
        value: uncertainty_series(&inp, variant),
        variant,
        in_regime: params.eps().abs() <= EXPANSION_REGIME && params.delta() <= EXPANSION_REGIME,
        log_reliable: m.log_reliable,
    }
}

/// Exact generalized uncertainty bound and its expansions for one state.
pub fn exact_bound(
    psi: &SpectralField,
    ops: &HybridOperatorSet,
    p_ref: f64,
) -> Result<UncertaintyReport> {
    let params = ops.params();
    let m = moments(psi, params, p_ref)?;
    let bound = commutator_bound(psi, ops)?;
    let dx = m.dx();
    let dp = m.dp_hybrid();
    let product = dx * dp;
    let expanded = ExpansionVariant::ALL.map(|v| expanded_bound(&m, params, v));
    let best = *expanded
        .iter()
        .min_by(|a, b| (a.value - bound).abs().total_cmp(&(b.value - bound).abs()))
        .expect("two variants");
    let robertson = bound * params.commutator_prefactor();
    Ok(UncertaintyReport {
        dx,
        dp_hybrid: dp,
        product,
        exact_bound: bound,
        expanded_bound: best.value,
        expanded_variant: best.variant,
        expanded,
        slack: product - bound,
        robertson_bound: robertson,
        robertson_slack: product - robertson,
        p_ref,
        moments: m,
    })
}

/// `(hbar/2) |<M>| / |<v_g>|`.
pub fn energy_time_bound(psi: &SpectralField, ops: &HybridOperatorSet) -> Result<f64> {
    let v = ops.mean_velocity(psi)?;
    if v.abs() <= 1e-10 {
        return Err(Error::Precondition(format!(
            "mean group velocity {v:e} vanishes; the energy-time bound needs a moving state"
        )));
    }
    Ok(commutator_bound(psi, ops)? / v.abs())
}

/// Both sides of the energy-position relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyPositionReport {
    pub dx: f64,
    pub d_energy: f64,
    pub product: f64,
    /// `(hbar/2) |<M(p) v>|`.
    pub stated_bound: f64,
    /// `(hbar/2) |<v_g>|` from `[x, H] = i hbar v_g`.
    pub robertson_bound: f64,
}

pub fn energy_position(
    psi: &SpectralField,
    ops: &HybridOperatorSet,
    potential: Option<&Potential>,
) -> Result<EnergyPositionReport> {
    let params = ops.params();
    let m = moments(psi, params, params.hbar)?;
    let w = spectral_weights(psi);
    let mv: f64 = w
        .iter()
        .zip(ops.m_symbol().iter().zip(ops.vg_symbol()))
        .map(|(w, (m, v))| w * m * v)
        .sum();
    let (_, var_h) = energy_moments(psi, ops, potential)?;
    let d_energy = var_h.sqrt();
    Ok(EnergyPositionReport {
        dx: m.dx(),
        d_energy,
        product: m.dx() * d_energy,
        stated_bound: 0.5 * params.hbar * mv.abs(),
        robertson_bound: 0.5 * params.hbar * ops.mean_velocity(psi)?.abs(),
    })
}

/// `(<H>, <H^2> - <H>^2)` for a normalized field.
pub fn energy_moments(
    psi: &SpectralField,
    ops: &HybridOperatorSet,
    potential: Option<&Potential>,
) -> Result<(f64, f64)> {
    let h = ops.apply_hamiltonian(potential, psi)?;
    let n2 = psi.norm_sqr();
    let mean = psi.inner(&h)?.re / n2;
    let second = h.norm_sqr() / n2;
    Ok((mean, (second - mean * mean).max(0.0)))
}

/// `[1 - (eps^2/6) <p^4>/<p^2>^2 + (delta/2) <ln(|p|/p_ref) p^2>/<p^2>]^-1`.
pub fn metrology_correction(m: &MomentSet, params: &HybridParams) -> Result<f64> {
    if !(m.p2 > 0.0) {
        return Err(Error::Precondition(
            "metrology correction needs <p^2> > 0".into(),
        ));
    }
    let e = params.eps();
    let h2 = params.hbar * params.hbar;
    let bracket = 1.0 - e * e / 6.0 * m.p4 / (m.p2 * m.p2)
        + 0.5 * params.delta() * h2 * m.log_p_weighted / m.p2;
    if bracket <= 0.0 {
        return Err(Error::OutOfRegime(format!(
            "correction bracket {bracket} is not positive at eps = {e}, delta = {}",
            params.delta()
        )));
    }
    Ok(1.0 / bracket)
}

/// One row of the limiting-case table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitingCase {
    pub case: &'static str,
    pub description: String,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitingCaseTable {
    pub rows: Vec<LimitingCase>,
    pub minimal_length: MinimalLengthScan,
}

impl LimitingCaseTable {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Minimal-length scan across deformation strengths at `alpha = 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimalLengthScan {
    pub q_values: Vec<f64>,
    /// Smallest `(hbar/2)|<cos>| / dPi` over the scanned Gaussian widths.
    pub dx_min: Vec<f64>,
    /// Width at which the minimum sits.
    pub sigma_at_min: Vec<f64>,
    /// Whether that width is an end point of the scan (no interior minimum).
    pub at_scan_edge: Vec<bool>,
    /// Least-squares slope of `dx_min` against `hbar |ln q|` through the origin.
    pub slope: f64,
}

pub const MINIMAL_LENGTH_Q: [f64; 4] = [1.1, 1.3, 1.6, 2.0];
pub const MINIMAL_LENGTH_SLOPE: (f64, f64) = (0.4, 0.6);

/// Minimizes the position spread allowed by the `alpha = 2` cosine bound over
/// centred Gaussians whose width runs from `4 dx` to `L/8`.
pub fn minimal_length_scan(
    q_values: &[f64],
    n_points: usize,
    half_box: f64,
    n_widths: usize,
) -> Result<MinimalLengthScan> {
    let grid = make_grid(n_points, -half_box, half_box)?;
    let (lo, hi) = (4.0 * grid.dx(), grid.length() / 8.0);
    let widths: Vec<f64> = (0..n_widths)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n_widths - 1) as f64))
        .collect();
    let mut scan = MinimalLengthScan {
        q_values: q_values.to_vec(),
        dx_min: vec![],
        sigma_at_min: vec![],
        at_scan_edge: vec![],
        slope: f64::NAN,
    };
    for &q in q_values {
        let params = HybridParams::new(q, 2.0)?;
        let ops = build_operators(&params, &grid)?;
        let mut best = (f64::INFINITY, 0usize);
        for (i, &s) in widths.iter().enumerate() {
            let psi = gaussian(&grid, 0.0, 0.0, s)?;
            let m = moments(&psi, &params, params.hbar)?;
            let dx = commutator_bound(&psi, &ops)? / m.dp_hybrid();
            if dx < best.0 {
                best = (dx, i);
            }
        }
        scan.dx_min.push(best.0);
        scan.sigma_at_min.push(widths[best.1]);
        scan.at_scan_edge
            .push(best.1 == 0 || best.1 == n_widths - 1);
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (&q, &d) in q_values.iter().zip(&scan.dx_min) {
        let x = q.ln().abs();
        num += x * d;
        den += x * x;
    }
    scan.slope = num / den;
    Ok(scan)
}

/// Undeformed, cosine, fractional and minimal-length limiting cases.
///
/// `params.q` sets the deformation used for the cosine case; `params.alpha`
/// sets the order used for the fractional case.
pub fn limiting_case_suite(params: &HybridParams) -> Result<LimitingCaseTable> {
    params.validate()?;
    let hbar = 1.0;
    let grid = make_grid(1024, -40.0, 40.0)?;
    let mut rows = Vec::new();

    // (a) undeformed mechanics.
    let sqm = HybridParams::new(1.0 + 1e-8, 2.0)?;
    let ops = build_operators(&sqm, &grid)?;
    let psi = gaussian(&grid, 0.0, 0.0, 1.0)?;
    let r = exact_bound(&psi, &ops, hbar)?;
    let gap = (r.product - 0.5).abs().max((r.exact_bound - 0.5).abs());
    rows.push(LimitingCase {
        case: "a",
        description: "q -> 1, alpha = 2: product and bound reduce to hbar/2".into(),
        value: r.product,
        reference: 0.5,
        tolerance: 1e-5,
        pass: gap <= 1e-5,
        note: format!("exact bound {:.12}", r.exact_bound),
    });

    // (b) alpha = 2: exact bound against an independent cosine average.
    let cos_params = HybridParams::new(params.q, 2.0)?;
    let ops = build_operators(&cos_params, &grid)?;
    let psi = gaussian(&grid, 0.0, 0.0, 2.0)?;
    let r = exact_bound(&psi, &ops, hbar)?;
    let w = spectral_weights(&psi);
    let half_eps = 0.5 * cos_params.eps();
    let cos_mean: f64 = w
        .iter()
        .zip(grid.k_values())
        .map(|(w, k)| w * (k * half_eps).cos())
        .sum();
    let cos_bound = 0.5 * hbar * cos_mean.abs();
    let dp2 = r.moments.var_p_std;
    let small = 0.5 * hbar * (1.0 - dp2 * cos_params.eps().powi(2) / 8.0);
    rows.push(LimitingCase {
        case: "b",
        description: format!(
            "alpha = 2, q = {}: bound equals (hbar/2)|<cos(p ln q / 2 hbar)>|",
            params.q
        ),
        value: r.exact_bound,
        reference: cos_bound,
        tolerance: 1e-10,
        pass: (r.exact_bound - cos_bound).abs() <= 1e-10,
        note: format!("narrow-spread approximation {small:.12}"),
    });

    // (c) q -> 1 at the requested order; a boosted state keeps clear of p = 0.
    let frac = HybridParams::new(1.0 + 1e-8, params.alpha)?;
    let ops = build_operators(&frac, &grid)?;
    let psi = gaussian(&grid, 0.0, 2.0, 2.0)?;
    let r = exact_bound(&psi, &ops, hbar)?;
    let w = spectral_weights(&psi);
    let a = frac.alpha;
    let frac_mean: f64 = w
        .iter()
        .zip(grid.k_values())
        .filter(|(_, k)| **k != 0.0)
        .map(|(w, &k)| w * 0.5 * a * fractional_symbol(&frac, k).abs().powf((a - 2.0) / a))
        .sum();
    let frac_bound = 0.5 * hbar * frac_mean.abs();
    let delta = frac.delta();
    let log_form = 0.5 * hbar * (1.0 - 0.5 * delta * r.moments.log_p);
    rows.push(LimitingCase {
        case: "c",
        description: format!("q -> 1, alpha = {a}: bound equals (hbar/2)(alpha/2)<|p|^(alpha/2 - 1)>"),
        value: r.exact_bound,
        reference: frac_bound,
        tolerance: 1e-6,
        pass: (r.exact_bound - frac_bound).abs() <= 1e-6 * frac_bound,
        note: format!(
            "log form (hbar/2)[1 - (delta/2)<ln(|p|/p_ref)>] = {log_form:.9}, gap {:.3e} (dropped -delta/2 term)",
            r.exact_bound - log_form
        ),
    });

    // (d) minimal length.
    let scan = minimal_length_scan(&MINIMAL_LENGTH_Q, 2048, 100.0, 64)?;
    let (lo, hi) = MINIMAL_LENGTH_SLOPE;
    let edges = scan.at_scan_edge.iter().filter(|e| **e).count();
    rows.push(LimitingCase {
        case: "d",
        description: "alpha = 2: minimal position spread proportional to hbar|ln q|/2".into(),
        value: scan.slope,
        reference: 0.5,
        tolerance: 0.1,
        pass: (lo..=hi).contains(&scan.slope),
        note: format!(
            "{edges} of {} minima sit on the edge of the width scan",
            scan.q_values.len()
        ),
    });

    Ok(LimitingCaseTable {
        rows,
        minimal_length: scan,
    })
}

/// Builds the operators for `params` and runs [`exact_bound`].
pub fn bound_for(
    params: &HybridParams,
    grid: &Arc<Grid1D>,
    psi: &SpectralField,
    p_ref: f64,
) -> Result<UncertaintyReport> {
    exact_bound(psi, &build_operators(params, grid)?, p_ref)
}
