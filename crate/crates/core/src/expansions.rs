//! Weak-deformation series in `eps = ln q` and `delta = 2 - alpha`.
//!
//! Every function evaluates its series exactly as printed, so the exact
//! spectral computations can arbitrate between them. Terms with `ln(2m)`
//! depend on the unit system; the `ln(|p|/p_ref)` terms depend on `p_ref`.

use serde::{Deserialize, Serialize};

use crate::states::MomentSet;
use crate::symbols::HybridParams;

/// Largest `|eps|` and `delta` for which inputs count as in regime.
pub const SERIES_VALIDITY: f64 = 0.5;

/// Relative tolerance on the Gaussian moment identities.
pub const GAUSSIAN_MOMENT_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExpansionInput {
    pub eps: f64,
    pub delta: f64,
    pub moments: MomentSet,
    pub mass: f64,
    pub hbar: f64,
}

impl ExpansionInput {
    pub fn new(params: &HybridParams, moments: MomentSet) -> Self {
        ExpansionInput {
            eps: params.eps(),
            delta: params.delta(),
            moments,
            mass: params.mass,
            hbar: params.hbar,
        }
    }

    pub fn in_regime(&self) -> bool {
        self.eps.abs() <= SERIES_VALIDITY && (0.0..=SERIES_VALIDITY).contains(&self.delta)
    }

    /// `<p^4> = 3 dp^4` and `<p^6> = 15 dp^6` within 5 %.
    pub fn gaussian_moments(&self) -> bool {
        let v = self.moments.var_p_std;
        let close = |a: f64, b: f64| (a - b).abs() <= GAUSSIAN_MOMENT_TOLERANCE * b.abs();
        v > 0.0 && close(self.moments.p4, 3.0 * v * v) && close(self.moments.p6, 15.0 * v * v * v)
    }
}

/// Which ε² coefficient the uncertainty expansion carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpansionVariant {
    /// `1 + (eps^2/12) <p^2>/hbar^2 - (delta/2)<ln> + (eps^2 delta/24) <(p^2/hbar^2) ln>`.
    Stated,
    /// `1 - (delta/2)<ln> - (eps^2/8) <p^2>/hbar^2`, the term-by-term expansion of `<M>`.
    Derived,
}

impl ExpansionVariant {
    pub const ALL: [ExpansionVariant; 2] = [ExpansionVariant::Stated, ExpansionVariant::Derived];

    /// The ε² coefficient multiplying `<p^2>/hbar^2`.
    pub fn eps2_coefficient(self) -> f64 {
        match self {
            ExpansionVariant::Stated => 1.0 / 12.0,
            ExpansionVariant::Derived => -1.0 / 8.0,
        }
    }
}

/// `E(p) ~ (p^2/2m) [1 - eps + eps^2 (7/12 - p^2/(12 hbar^2)) + (delta/2) ln(2m) + delta eps / 2]`.
pub fn dispersion_series(inp: &ExpansionInput, p: f64) -> f64 {
    let (e, d) = (inp.eps, inp.delta);
    let r = p * p / (inp.hbar * inp.hbar);
    p * p / (2.0 * inp.mass)
        * (1.0 - e
            + e * e * (7.0 / 12.0 - r / 12.0)
            + 0.5 * d * (2.0 * inp.mass).ln()
            + 0.5 * d * e)
}

/// Both printed forms of the kinetic energy variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyVarianceSeries {
    /// Built from `<p^2>`, `<p^4>`, `<p^6>` directly.
    pub general: f64,
    /// `(dp^4/2m^2) [1 + (eps^2/6)(7 - 3 dp^2/hbar^2) + delta ln(2m)]`.
    pub gaussian: f64,
    /// `(dp^4/2m^2) [1 - (eps^2/2) dp^2/hbar^2]`, the truncation printed after it.
    pub gaussian_truncated: f64,
    /// Whether the moments satisfy the Gaussian identities the substitution assumes.
    pub gaussian_regime: bool,
}

pub fn energy_variance_series(inp: &ExpansionInput) -> EnergyVarianceSeries {
    let m = &inp.moments;
    let (e, d) = (inp.eps, inp.delta);
    let m2 = inp.mass * inp.mass;
    let h2 = inp.hbar * inp.hbar;
    let var_p2 = m.p4 - m.p2 * m.p2;
    let ln2m = (2.0 * inp.mass).ln();
    let general = var_p2 / (4.0 * m2)
        + e * e / (24.0 * m2) * (7.0 * var_p2 - (m.p6 - m.p2 * m.p4) / h2)
        + d * ln2m / (4.0 * m2) * var_p2;
    let dp2 = m.var_p_std;
    let lead = dp2 * dp2 / (2.0 * m2);
    EnergyVarianceSeries {
        general,
        gaussian: lead * (1.0 + e * e / 6.0 * (7.0 - 3.0 * dp2 / h2) + d * ln2m),
        gaussian_truncated: lead * (1.0 - 0.5 * e * e * dp2 / h2),
        gaussian_regime: inp.gaussian_moments(),
    }
}

/// Orthogonalization-time series
/// `tau_QM [1 - (eps^2/6) <p^4>/dp^4 + (delta/2) <dp^2 ln(|p|/p_ref)>/dp^4]`
/// with `tau_QM = pi m hbar / (2 dp^2)`.
pub fn qsl_series(inp: &ExpansionInput) -> f64 {
    let m = &inp.moments;
    let dp2 = m.var_p_std;
    let tau_qm = std::f64::consts::PI * inp.mass * inp.hbar / (2.0 * dp2);
    tau_qm
        * (1.0 - inp.eps * inp.eps / 6.0 * m.p4 / (dp2 * dp2)
            + 0.5 * inp.delta * dp2 * m.log_p / (dp2 * dp2))
}

/// `(hbar/2) [ ... ]` in either variant.
pub fn uncertainty_series(inp: &ExpansionInput, variant: ExpansionVariant) -> f64 {
    let m = &inp.moments;
    let (e, d) = (inp.eps, inp.delta);
    let r = m.p2 / (inp.hbar * inp.hbar);
    let bracket = match variant {
        ExpansionVariant::Stated => {
            1.0 + e * e / 12.0 * r - 0.5 * d * m.log_p + e * e * d / 24.0 * m.log_p_weighted
        }
        ExpansionVariant::Derived => 1.0 - 0.5 * d * m.log_p - e * e / 8.0 * r,
    };
    0.5 * inp.hbar * bracket
}
