//! Wavefunctions and their position/momentum moments.

use std::f64::consts::PI;
use std::ops::Deref;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{Grid1D, SpectralField};
use crate::symbols::{hybrid_symbol, HybridParams};

/// Default normalization tolerance.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Spectral weight at `k = 0` above which log-moments are flagged.
pub const LOG_POLE_WEIGHT_LIMIT: f64 = 1e-3;

/// A normalized state on a grid.
#[derive(Debug, Clone)]
pub struct WaveFunction {
    field: SpectralField,
    norm_tolerance: f64,
}

impl Deref for WaveFunction {
    type Target = SpectralField;

    fn deref(&self) -> &SpectralField {
        &self.field
    }
}

impl WaveFunction {
    /// Normalizes `field` and wraps it.
    pub fn normalized(field: SpectralField) -> Result<Self> {
        let n = field.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::Precondition("cannot normalize a zero field".into()));
        }
        Ok(WaveFunction {
            field: field.scale(Complex64::new(1.0 / n, 0.0)),
            norm_tolerance: NORM_TOLERANCE,
        })
    }

    pub fn field(&self) -> &SpectralField {
        &self.field
    }

    pub fn into_field(self) -> SpectralField {
        self.field
    }

    pub fn norm_tolerance(&self) -> f64 {
        self.norm_tolerance
    }

    /// Whether `|psi|^2` integrates to one within the tolerance.
    pub fn is_normalized(&self) -> bool {
        (self.field.norm_sqr() - 1.0).abs() <= self.norm_tolerance
    }
}

/// Gaussian `exp(-(x - x0)^2 / (4 sigma^2) + i k0 x)`, normalized.
///
/// `sigma` is the position standard deviation, so the canonical momentum
/// spread is `hbar / (2 sigma)`.
pub fn gaussian(
    grid: &Arc<Grid1D>,
    center_x: f64,
    center_k: f64,
    sigma: f64,
) -> Result<WaveFunction> {
    if !(sigma >= 4.0 * grid.dx()) {
        return Err(Error::config(
            "state.sigma",
            format!("sigma = {sigma} is below 4 dx = {}", 4.0 * grid.dx()),
        ));
    }
    if sigma > grid.length() / 8.0 {
        return Err(Error::config(
            "state.sigma",
            format!(
                "sigma = {sigma} exceeds box length / 8 = {}",
                grid.length() / 8.0
            ),
        ));
    }
    if !(center_x > grid.x_min() && center_x < grid.x_max()) {
        return Err(Error::config(
            "state.center_x",
            "center lies outside the box",
        ));
    }
    let values = grid
        .x_values()
        .iter()
        .map(|&x| {
            let d = x - center_x;
            Complex64::from_polar((-d * d / (4.0 * sigma * sigma)).exp(), center_k * x)
        })
        .collect();
    WaveFunction::normalized(SpectralField::from_position(grid.clone(), values)?)
}

/// Equal-weight superposition of two grid plane waves,
/// `(e^{i k1 x} + e^{i phase} e^{i k2 x}) / sqrt(2 L)`.
///
/// Modes are given as bin indices into [`Grid1D::k_values`].
pub fn two_mode_superposition(
    grid: &Arc<Grid1D>,
    k1_index: usize,
    k2_index: usize,
    phase: f64,
) -> Result<WaveFunction> {
    let n = grid.len();
    if k1_index >= n {
        return Err(Error::config(
            "state.k1_index",
            format!("{k1_index} is not a bin of an {n}-point grid"),
        ));
    }
    if k2_index >= n {
        return Err(Error::config(
            "state.k2_index",
            format!("{k2_index} is not a bin of an {n}-point grid"),
        ));
    }
    if k1_index == k2_index {
        return Err(Error::config("state.k2_index", "the two modes must differ"));
    }
    let amp = 1.0 / (2.0 * grid.length()).sqrt();
    let (k1, k2) = (grid.k_values()[k1_index], grid.k_values()[k2_index]);
    let values = grid
        .x_values()
        .iter()
        .map(|&x| Complex64::from_polar(amp, k1 * x) + Complex64::from_polar(amp, k2 * x + phase))
        .collect();
    WaveFunction::normalized(SpectralField::from_position(grid.clone(), values)?)
}

/// Single grid plane wave `e^{i k_j x}`, normalized on the box.
pub fn plane_wave(grid: &Arc<Grid1D>, k_index: usize) -> Result<WaveFunction> {
    if k_index >= grid.len() {
        return Err(Error::config("state.k_index", "not a bin of the grid"));
    }
    let k = grid.k_values()[k_index];
    let values = grid
        .x_values()
        .iter()
        .map(|&x| Complex64::from_polar(1.0, k * x))
        .collect();
    WaveFunction::normalized(SpectralField::from_position(grid.clone(), values)?)
}

/// State whose spectrum is a smooth compact bump supported strictly inside
/// `(k_lo, k_hi)` and exactly zero elsewhere. Centered at `center_x`.
pub fn band_limited(
    grid: &Arc<Grid1D>,
    k_lo: f64,
    k_hi: f64,
    center_x: f64,
) -> Result<WaveFunction> {
    if !(k_hi > k_lo) {
        return Err(Error::config("state.band", "empty band"));
    }
    let mid = 0.5 * (k_lo + k_hi);
    let half = 0.5 * (k_hi - k_lo);
    let spectrum: Vec<Complex64> = grid
        .k_values()
        .iter()
        .map(|&k| {
            let t = (k - mid) / half;
            if t.abs() < 1.0 {
                let amp = (-1.0 / (1.0 - t * t)).exp();
                Complex64::from_polar(amp, -k * center_x)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    let occupied = spectrum.iter().filter(|c| c.norm() > 0.0).count();
    if occupied < 8 {
        return Err(Error::config(
            "state.band",
            format!("band ({k_lo}, {k_hi}) covers only {occupied} grid modes"),
        ));
    }
    WaveFunction::normalized(SpectralField::from_spectrum(grid.clone(), spectrum)?)
}

/// Normalized white-noise state with real and imaginary parts uniform in `[-1, 1)`.
pub fn random_state<R: Rng + ?Sized>(grid: &Arc<Grid1D>, rng: &mut R) -> Result<WaveFunction> {
    let values = (0..grid.len())
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    WaveFunction::normalized(SpectralField::from_position(grid.clone(), values)?)
}

/// Position and momentum moments of a state.
///
/// Momentum moments use the canonical momentum `p = hbar k`; the hybrid
/// moments use `Pi_{q,alpha}(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentSet {
    pub mean_x: f64,
    pub var_x: f64,
    pub mean_p_std: f64,
    pub var_p_std: f64,
    pub p2: f64,
    pub p4: f64,
    pub p6: f64,
    pub mean_p_hybrid: f64,
    pub var_p_hybrid: f64,
    /// `<ln(|p| / p_ref)>`.
    pub log_p: f64,
    /// `<(p^2 / hbar^2) ln(|p| / p_ref)>`.
    pub log_p_weighted: f64,
    pub p_ref: f64,
    /// Spectral weight in the `k = 0` bin.
    pub pole_weight: f64,
    /// False when the `k = 0` bin carries more than [`LOG_POLE_WEIGHT_LIMIT`].
    pub log_reliable: bool,
}

impl MomentSet {
    pub fn dx(&self) -> f64 {
        self.var_x.max(0.0).sqrt()
    }

    pub fn dp_std(&self) -> f64 {
        self.var_p_std.max(0.0).sqrt()
    }

    pub fn dp_hybrid(&self) -> f64 {
        self.var_p_hybrid.max(0.0).sqrt()
    }
}

/// Normalized spectral weights `|c_m|^2 / sum |c|^2`.
pub fn spectral_weights(field: &SpectralField) -> Vec<f64> {
    let w: Vec<f64> = field.spectrum().iter().map(|c| c.norm_sqr()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// Computes every moment of `psi`. `p_ref` sets the scale of the log-moments.
pub fn moments(psi: &SpectralField, params: &HybridParams, p_ref: f64) -> Result<MomentSet> {
    if !(p_ref.is_finite() && p_ref > 0.0) {
        return Err(Error::Precondition(format!(
            "p_ref = {p_ref} must be positive"
        )));
    }
    let grid = psi.grid();
    let density: Vec<f64> = psi.values().iter().map(|c| c.norm_sqr()).collect();
    let mass: f64 = density.iter().sum();
    let mean_x = density
        .iter()
        .zip(grid.x_values())
        .map(|(d, x)| d * x)
        .sum::<f64>()
        / mass;
    let var_x = density
        .iter()
        .zip(grid.x_values())
        .map(|(d, x)| d * (x - mean_x).powi(2))
        .sum::<f64>()
        / mass;

    let hbar = params.hbar;
    let w = spectral_weights(psi);
    let ks = grid.k_values();
    let (mut p1, mut p2, mut p4, mut p6, mut h1, mut h2) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    let mut log_w = 0.0;
    for (&wj, &k) in w.iter().zip(ks) {
        let p = hbar * k;
        let pp = p * p;
        p1 += wj * p;
        p2 += wj * pp;
        p4 += wj * pp * pp;
        p6 += wj * pp * pp * pp;
        let pi = hybrid_symbol(params, k);
        h1 += wj * pi;
        h2 += wj * pi * pi;
        if k != 0.0 {
            log_w += wj * k * k * (p.abs() / p_ref).ln();
        }
    }
    let log_p = log_abs_k_mean(grid, &w) + (hbar / p_ref).ln();
    let pole_weight = w[0];
    Ok(MomentSet {
        mean_x,
        var_x,
        mean_p_std: p1,
        var_p_std: (p2 - p1 * p1).max(0.0),
        p2,
        p4,
        p6,
        mean_p_hybrid: h1,
        var_p_hybrid: (h2 - h1 * h1).max(0.0),
        log_p,
        log_p_weighted: log_w,
        p_ref,
        pole_weight,
        log_reliable: pole_weight <= LOG_POLE_WEIGHT_LIMIT,
    })
}

/// `zeta'(-2) = -zeta(3) / (4 pi^2)`.
const ZETA_PRIME_MINUS_TWO: f64 = -0.030_448_457_058_393_27;

/// `<ln|k|>` for normalized bin weights `w`.
///
/// Trapezoid sum with the `k = 0` bin skipped, plus the generalized
/// Euler-Maclaurin corrections for a logarithmic singularity at a node:
/// `w_0 ln(dk / 2 pi)` and `zeta'(-2)` times the second difference at the pole.
/// The error is `O(dk^5)` for smooth densities.
pub(crate) fn log_abs_k_mean(grid: &Grid1D, w: &[f64]) -> f64 {
    let ks = grid.k_values();
    let n = w.len();
    let regular: f64 = w
        .iter()
        .zip(ks)
        .skip(1)
        .map(|(wj, k)| wj * k.abs().ln())
        .sum();
    let pole = w[0] * (grid.dk() / (2.0 * PI)).ln();
    let curvature = w[1] + w[n - 1] - 2.0 * w[0];
    regular + pole + ZETA_PRIME_MINUS_TWO * curvature
}

/// Continuum Gaussian momentum density used by oracles in tests.
pub fn gaussian_momentum_density(k: f64, center_k: f64, sigma_x: f64) -> f64 {
    let sk = 1.0 / (2.0 * sigma_x);
    (-(k - center_k).powi(2) / (2.0 * sk * sk)).exp() / ((2.0 * PI).sqrt() * sk)
}
