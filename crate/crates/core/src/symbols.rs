//! Closed-form scalar symbols of the hybrid (q, alpha) framework.
//!
//! Everything here is a pure function of [`HybridParams`] and a wavenumber or
//! momentum. The momentum symbol is
//!
//! ```text
//! Pi(k) = |A sin(k eps / 2)|^(alpha/2) sgn(k),   A = 2 hbar / (q - 1),  eps = ln q
//! ```
//!
//! and the kinetic symbol is `E(k) = D_alpha |A sin(k eps / 2)|^alpha` with
//! `D_alpha = (2 m)^(-alpha/2)`. Taking the magnitude before the fractional
//! power keeps `Pi` real and odd; `E` needs no sign convention at all.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Closest allowed approach to `q = 1`.
pub const MIN_DEFORMATION: f64 = 1e-10;

/// Below this `|q - 1|` the denominator is recomputed as `expm1(ln q)`.
const NEAR_DEGENERATE: f64 = 1e-6;

/// Curvatures smaller than this are reported as a flat band.
const FLAT_CURVATURE: f64 = 1e-14;

/// Physical parameters `(q, alpha, hbar, m)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridParams {
    pub q: f64,
    pub alpha: f64,
    #[serde(default = "one")]
    pub hbar: f64,
    #[serde(default = "one")]
    pub mass: f64,
}

fn one() -> f64 {
    1.0
}

impl HybridParams {
    /// Parameters in units with `hbar = m = 1`.
    pub fn new(q: f64, alpha: f64) -> Result<Self> {
        Self::with_units(q, alpha, 1.0, 1.0)
    }

    pub fn with_units(q: f64, alpha: f64, hbar: f64, mass: f64) -> Result<Self> {
        let p = HybridParams {
            q,
            alpha,
            hbar,
            mass,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks the invariants; useful after deserializing.
    pub fn validate(&self) -> Result<()> {
        if !(self.q.is_finite() && self.q > 0.0) {
            return Err(Error::config(
                "params.q",
                format!("q = {} must be > 0", self.q),
            ));
        }
        if (self.q - 1.0).abs() < MIN_DEFORMATION {
            return Err(Error::config(
                "params.q",
                format!(
                    "q = {} is within {MIN_DEFORMATION:e} of 1; approach the undeformed limit with q = 1 +/- eta",
                    self.q
                ),
            ));
        }
        if !(self.alpha > 1.0 && self.alpha <= 2.0) {
            return Err(Error::config(
                "params.alpha",
                format!("alpha = {} must lie in (1, 2]", self.alpha),
            ));
        }
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(Error::config("params.hbar", "hbar must be positive"));
        }
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::config("params.mass", "mass must be positive"));
        }
        Ok(())
    }

    /// `eps = ln q`.
    pub fn eps(&self) -> f64 {
        (self.q - 1.0).ln_1p()
    }

    /// `delta = 2 - alpha`.
    pub fn delta(&self) -> f64 {
        2.0 - self.alpha
    }

    /// `D_alpha = (2 m)^(-alpha/2)`.
    pub fn d_alpha(&self) -> f64 {
        (2.0 * self.mass).powf(-self.alpha / 2.0)
    }

    /// `q - 1`, recomputed as `expm1(ln q)` when nearly degenerate.
    pub fn q_minus_one(&self) -> f64 {
        let d = self.q - 1.0;
        if d.abs() < NEAR_DEGENERATE {
            self.eps().exp_m1()
        } else {
            d
        }
    }

    /// `A = 2 hbar / (q - 1)`; signed.
    pub fn amplitude(&self) -> f64 {
        2.0 * self.hbar / self.q_minus_one()
    }

    /// Upper edge of the kinetic spectrum, `D_alpha (2 hbar / |q - 1|)^alpha`.
    pub fn e_max(&self) -> f64 {
        self.d_alpha() * self.amplitude().abs().powf(self.alpha)
    }

    /// Bound on `|Pi(k)|`, `(2 hbar / |q - 1|)^(alpha/2)`.
    pub fn symbol_bound(&self) -> f64 {
        self.amplitude().abs().powf(self.alpha / 2.0)
    }

    /// `ln q / (q - 1)`: the factor relating `dPi/dk` to `hbar * M(hbar k)`.
    ///
    /// The exact commutator is `[x, p_{q,alpha}] = i hbar (ln q / (q - 1)) M(p)`;
    /// the factor tends to 1 only as `q -> 1`.
    pub fn commutator_prefactor(&self) -> f64 {
        self.eps() / self.q_minus_one()
    }

    /// Period of every symbol in k, `2 pi / |ln q|` (the symbol `Pi` itself
    /// has twice this period because of `sgn(k)`).
    pub fn band_period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.eps().abs()
    }
}

/// `sgn` with `sgn(0) = 0`.
pub(crate) fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `A sin(k eps / 2)`, the undeformed-power q-symbol.
fn q_base(p: &HybridParams, k: f64) -> f64 {
    p.amplitude() * (0.5 * k * p.eps()).sin()
}

/// Hybrid momentum symbol `Pi_{q,alpha}(k)`.
pub fn hybrid_symbol(p: &HybridParams, k: f64) -> f64 {
    q_base(p, k).abs().powf(p.alpha / 2.0) * sign(k)
}

/// Momentum symbol of order `beta`: `|A sin(k eps / 2)|^(beta/2) sgn(k)`.
///
/// `hybrid_symbol` is the case `beta = alpha`.
pub fn symbol_of_order(p: &HybridParams, k: f64, beta: f64) -> f64 {
    q_base(p, k).abs().powf(beta / 2.0) * sign(k)
}

/// Kinetic energy of the plane wave `e^{ikx}`.
pub fn kinetic_symbol(p: &HybridParams, k: f64) -> f64 {
    p.d_alpha() * q_base(p, k).abs().powf(p.alpha)
}

/// Group velocity `dE/d(hbar k)`.
///
/// Continuous everywhere for `alpha > 1`; it vanishes at every band
/// minimum and maximum.
pub fn group_velocity(p: &HybridParams, k: f64) -> f64 {
    let half = 0.5 * k * p.eps();
    let f = p.amplitude() * half.sin();
    let df = p.amplitude() * 0.5 * p.eps() * half.cos();
    p.d_alpha() * p.alpha * f.abs().powf(p.alpha - 1.0) * sign(f) * df / p.hbar
}

/// Second derivative `d^2 E / dk^2`, `+inf` at band minima when `alpha < 2`.
pub fn kinetic_curvature(p: &HybridParams, k: f64) -> f64 {
    let half = 0.5 * k * p.eps();
    let s = 0.5 * p.eps();
    let f = p.amplitude() * half.sin();
    let df = p.amplitude() * s * half.cos();
    let a = p.alpha;
    if f == 0.0 && a < 2.0 {
        return f64::INFINITY;
    }
    p.d_alpha() * a * ((a - 1.0) * f.abs().powf(a - 2.0) * df * df - s * s * f.abs().powf(a))
}

/// Effective mass `hbar^2 / (d^2E/dk^2)`, i.e. `(d^2E/dp^2)^-1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EffectiveMass {
    Finite(f64),
    /// The band is locally flat (curvature below `1e-14`).
    Infinite,
    /// The dispersion has a cusp (`alpha < 2` at a band minimum); the
    /// curvature diverges and the mass tends to zero from above.
    Cusp,
}

impl EffectiveMass {
    pub fn value(&self) -> f64 {
        match self {
            EffectiveMass::Finite(m) => *m,
            EffectiveMass::Infinite => f64::INFINITY,
            EffectiveMass::Cusp => 0.0,
        }
    }
}

pub fn effective_mass(p: &HybridParams, k: f64) -> EffectiveMass {
    let c = kinetic_curvature(p, k);
    if c.is_infinite() {
        EffectiveMass::Cusp
    } else if c.abs() < FLAT_CURVATURE {
        EffectiveMass::Infinite
    } else {
        EffectiveMass::Finite(p.hbar * p.hbar / c)
    }
}

/// Value of the commutator multiplier at one momentum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommutatorValue {
    pub value: f64,
    /// Set where the fractional power diverges (`alpha < 2`, zero base).
    pub divergent: bool,
}

/// `M_{q,alpha}(p) = (alpha/2) |A sin(p eps / 2 hbar)|^(alpha/2 - 1) cos(p eps / 2 hbar)`.
///
/// For `alpha < 2` the value diverges like `|p|^(alpha/2 - 1)` at `p = 0` and
/// at every other zero of the base. The small-`p` behaviour is
/// `(alpha/2) (p ln q / (q - 1))^(alpha/2 - 1)`, which depends on `p`; the
/// p-independent constant sometimes quoted for this limit is not recovered.
pub fn commutator_multiplier(p: &HybridParams, momentum: f64) -> CommutatorValue {
    let half = 0.5 * momentum * p.eps() / p.hbar;
    let base = p.amplitude() * half.sin();
    let exponent = p.alpha / 2.0 - 1.0;
    if base == 0.0 && exponent < 0.0 {
        return CommutatorValue {
            value: f64::INFINITY,
            divergent: true,
        };
    }
    CommutatorValue {
        value: 0.5 * p.alpha * base.abs().powf(exponent) * half.cos(),
        divergent: false,
    }
}

/// The undeformed-q and alpha = 2 limit symbols evaluated on a k array.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitSymbols {
    /// `hbar^(alpha/2) |k|^(alpha/2) sgn(k)`.
    pub fractional: Vec<f64>,
    /// `(2 hbar / (q - 1)) sin(k ln q / 2)`.
    pub q_deformed: Vec<f64>,
}

pub fn limit_symbols(p: &HybridParams, ks: &[f64]) -> LimitSymbols {
    LimitSymbols {
        fractional: ks.iter().map(|&k| fractional_symbol(p, k)).collect(),
        q_deformed: ks.iter().map(|&k| q_base(p, k)).collect(),
    }
}

/// Momentum symbol of pure fractional mechanics.
pub fn fractional_symbol(p: &HybridParams, k: f64) -> f64 {
    (p.hbar * k.abs()).powf(p.alpha / 2.0) * sign(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params(q: f64, a: f64) -> HybridParams {
        HybridParams::new(q, a).unwrap()
    }

    // Centered first and second differences, the independent oracle for the
    // analytic derivatives.
    fn fd1(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    fn fd2(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h)
    }

    #[test]
    fn derived_accessors() {
        let p = HybridParams::with_units(1.7, 1.4, 0.8, 2.5).unwrap();
        assert_eq!(p.eps(), 1.7f64.ln());
        assert_relative_eq!(p.delta(), 0.6, epsilon = 1e-15);
        assert_relative_eq!(p.d_alpha(), 5.0f64.powf(-0.7), max_relative = 1e-15);
        assert_relative_eq!(
            p.e_max(),
            5.0f64.powf(-0.7) * (1.6f64 / 0.7).powf(1.4),
            max_relative = 1e-14
        );
        assert!(p.e_max() > 0.0);
    }

    #[test]
    fn rejects_invalid_parameters() {
        let err = HybridParams::new(1.0, 2.0).unwrap_err();
        assert!(matches!(
            err,
            Error::Config {
                field: "params.q",
                ..
            }
        ));
        assert!(HybridParams::new(1.0 + 1e-11, 2.0).is_err());
        assert!(HybridParams::new(1.0 + 1e-10, 2.0).is_ok());
        assert!(HybridParams::new(-0.5, 2.0).is_err());
        assert!(HybridParams::new(1.5, 1.0).is_err());
        assert!(HybridParams::new(1.5, 2.1).is_err());
        assert!(HybridParams::with_units(1.5, 2.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn symbol_at_origin_and_near_undeformed_limit() {
        let p = params(1.5, 1.3);
        assert_eq!(hybrid_symbol(&p, 0.0), 0.0);
        let near = params(1.0 + 1e-8, 1.5);
        assert_relative_eq!(
            hybrid_symbol(&near, 2.0),
            2f64.powf(0.75),
            max_relative = 1e-7
        );
        assert_relative_eq!(hybrid_symbol(&near, 2.0), 1.681793, epsilon = 1e-6);
    }

    #[test]
    fn kinetic_values() {
        let p = params(2.0, 2.0);
        assert_eq!(kinetic_symbol(&p, 0.0), 0.0);
        assert_relative_eq!(p.e_max(), 2.0, max_relative = 1e-15);
        let top = PI / 2f64.ln();
        assert_relative_eq!(kinetic_symbol(&p, top), 2.0, max_relative = 1e-14);
        let near = params(1.0 + 1e-8, 2.0);
        assert_relative_eq!(kinetic_symbol(&near, 1.0), 0.5, max_relative = 1e-7);
    }

    #[test]
    fn kinetic_matches_cosine_form() {
        // Independent evaluation of D [(2 hbar^2/(q-1)^2)(1 - cos(k ln q))]^(alpha/2).
        let p = HybridParams::with_units(1.8, 1.7, 1.3, 0.6).unwrap();
        for i in 0..50 {
            let k = -6.0 + 0.25 * i as f64;
            let cosine = p.d_alpha()
                * (2.0 * p.hbar * p.hbar / (0.8 * 0.8) * (1.0 - (k * 1.8f64.ln()).cos()))
                    .powf(p.alpha / 2.0);
            assert_relative_eq!(
                kinetic_symbol(&p, k),
                cosine,
                max_relative = 1e-9,
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn group_velocity_limits() {
        let p = params(2.0, 2.0);
        assert!(group_velocity(&p, PI / 2f64.ln()).abs() < 1e-14);
        let near = params(1.0 + 1e-8, 2.0);
        assert_relative_eq!(group_velocity(&near, 3.0), 3.0, max_relative = 1e-7);
        let frac = params(1.4, 1.5);
        assert_eq!(group_velocity(&frac, 0.0), 0.0);
    }

    #[test]
    fn effective_mass_cases() {
        let near = params(1.0 + 1e-8, 2.0);
        for k in [-2.0, 0.0, 0.3, 4.0] {
            match effective_mass(&near, k) {
                EffectiveMass::Finite(m) => assert_relative_eq!(m, 1.0, max_relative = 1e-6),
                other => panic!("unexpected {other:?}"),
            }
        }
        let p = params(2.0, 2.0);
        let k = PI / 2f64.ln() - 0.05;
        let m = effective_mass(&p, k).value();
        assert!(m < 0.0);
        let brute = fd2(|k| kinetic_symbol(&p, k), k, 1e-4);
        assert!(brute < 0.0);
        // Inflection point of the cosine band: flat curvature.
        let p = params(2.0, 2.0);
        let inflection = 0.5 * PI / 2f64.ln();
        assert_eq!(effective_mass(&p, inflection), EffectiveMass::Infinite);
        assert_eq!(effective_mass(&params(1.5, 1.5), 0.0), EffectiveMass::Cusp);
    }

    #[test]
    fn commutator_multiplier_cases() {
        let p = params(1.7, 2.0);
        assert_eq!(commutator_multiplier(&p, 0.0).value, 1.0);
        for i in 0..20 {
            let mom = -3.0 + 0.37 * i as f64;
            let expect = (mom * 1.7f64.ln() / 2.0).cos();
            assert_relative_eq!(
                commutator_multiplier(&p, mom).value,
                expect,
                epsilon = 1e-15
            );
        }
        let near = params(1.0 + 1e-8, 1.8);
        let m = commutator_multiplier(&near, 2.0);
        assert!(!m.divergent);
        assert_relative_eq!(m.value, 0.9 * 2f64.powf(-0.1), max_relative = 1e-7);
        let frac = params(1.3, 1.6);
        assert!(commutator_multiplier(&frac, 0.0).divergent);
    }

    #[test]
    fn commutator_is_scaled_symbol_slope() {
        // dPi/dk = hbar * (ln q/(q-1)) * M(hbar k) inside the principal band.
        let p = HybridParams::with_units(1.6, 1.7, 0.9, 1.0).unwrap();
        for i in 1..30 {
            let k = 0.2 * i as f64;
            let slope = fd1(|k| hybrid_symbol(&p, k), k, 1e-6);
            let m = commutator_multiplier(&p, p.hbar * k).value;
            assert_relative_eq!(
                slope,
                p.hbar * p.commutator_prefactor() * m,
                max_relative = 1e-6
            );
        }
    }

    #[test]
    fn limit_branches() {
        let p = params(1.5, 2.0);
        let ks: Vec<f64> = (0..40).map(|i| -5.0 + 0.25 * i as f64).collect();
        let lim = limit_symbols(&p, &ks);
        for (i, &k) in ks.iter().enumerate() {
            assert_eq!(lim.q_deformed[i], hybrid_symbol(&p, k));
            assert_eq!(lim.q_deformed[i], -limit_symbols(&p, &[-k]).q_deformed[0]);
            assert_eq!(lim.fractional[i], -fractional_symbol(&p, -k));
        }
        let frac = params(1.2, 1.5);
        assert_relative_eq!(
            fractional_symbol(&frac, 4.0),
            2.8284271247,
            max_relative = 1e-9
        );
    }

    #[test]
    fn undeformed_limit_converges_linearly() {
        let ks: Vec<f64> = (0..200).map(|i| -4.0 + 0.04 * i as f64).collect();
        let sup = |eta: f64| {
            let p = params(1.0 + eta, 1.6);
            ks.iter()
                .map(|&k| (hybrid_symbol(&p, k) - fractional_symbol(&p, k)).abs())
                .fold(0.0, f64::max)
        };
        let e1 = sup(1e-2);
        let e2 = sup(5e-3);
        let ratio = e1 / e2;
        assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
        assert!(sup(1e-8) < 1e-6);
    }

    proptest! {
        #[test]
        fn symbol_is_odd_and_bounded(q in 0.2f64..3.0, a in 1.01f64..2.0, k in -50.0f64..50.0) {
            prop_assume!((q - 1.0).abs() > 1e-3);
            let p = params(q, a);
            prop_assert_eq!(hybrid_symbol(&p, k) + hybrid_symbol(&p, -k), 0.0);
            prop_assert!(hybrid_symbol(&p, k).abs() <= p.symbol_bound() + 1e-12);
            let e = kinetic_symbol(&p, k);
            prop_assert!(e >= 0.0 && e <= p.e_max() * (1.0 + 1e-14));
            prop_assert_eq!(e, kinetic_symbol(&p, -k));
            let shifted = kinetic_symbol(&p, k + p.band_period());
            prop_assert!((shifted - e).abs() <= 1e-9 * p.e_max());
        }

        #[test]
        fn kinetic_is_scaled_symbol_power(q in 0.3f64..2.5, a in 1.05f64..2.0, k in -20.0f64..20.0) {
            prop_assume!((q - 1.0).abs() > 1e-3);
            let p = params(q, a);
            let amp = 2.0 / (q - 1.0);
            let independent = p.d_alpha() * (amp * (k * q.ln() / 2.0).sin()).abs().powf(a);
            prop_assert!((kinetic_symbol(&p, k) - independent).abs() <= 1e-10 * (1.0 + independent));
        }

        #[test]
        fn derivatives_match_finite_differences(q in 1.05f64..2.5, a in 1.1f64..2.0, u in 0.05f64..0.95) {
            let p = params(q, a);
            // Stay away from band extrema where the fractional power is not smooth.
            let k = u * p.band_period();
            let guard = 0.04 * p.band_period();
            prop_assume!(k > guard && (k - p.band_period()).abs() > guard);
            let h = 1e-6;
            let fd = fd1(|k| kinetic_symbol(&p, k), k, h) / p.hbar;
            let vg = group_velocity(&p, k);
            prop_assert!((vg - fd).abs() <= 1e-5 * vg.abs().max(1e-3), "vg {} fd {}", vg, fd);
            let curv = kinetic_curvature(&p, k);
            let fd2v = fd2(|k| kinetic_symbol(&p, k), k, 2e-3 / p.eps().abs());
            prop_assert!((curv - fd2v).abs() <= 1e-4 * curv.abs().max(1e-2), "curv {} fd {}", curv, fd2v);
        }
    }
}
