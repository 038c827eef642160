//! Hybrid operators as spectral multipliers and mixed-representation actions.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Grid1D, SpectralField};
use crate::states::spectral_weights;
use crate::symbols::{
    commutator_multiplier, group_velocity, hybrid_symbol, kinetic_symbol, symbol_of_order,
    HybridParams,
};

/// Anti-Hermitian admixture used by fault-injection builds.
pub const KINETIC_FAULT: f64 = 1e-3;

/// Real external potential sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    samples: Vec<f64>,
    lower_bound: f64,
    identically_zero: bool,
}

impl Potential {
    pub fn from_samples(grid: &Grid1D, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                got: samples.len(),
            });
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
            return Err(Error::config(
                "potential",
                format!("non-finite sample {bad}"),
            ));
        }
        let lower_bound = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let identically_zero = samples.iter().all(|&v| v == 0.0);
        Ok(Potential {
            samples,
            lower_bound,
            identically_zero,
        })
    }

    pub fn from_fn(grid: &Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_samples(grid, grid.x_values().iter().map(|&x| f(x)).collect())
    }

    pub fn zero(grid: &Grid1D) -> Self {
        Potential {
            samples: vec![0.0; grid.len()],
            lower_bound: 0.0,
            identically_zero: true,
        }
    }

    pub fn constant(grid: &Grid1D, c: f64) -> Result<Self> {
        Self::from_fn(grid, |_| c)
    }

    /// `m omega^2 x^2 / 2`.
    pub fn harmonic(grid: &Grid1D, omega: f64, mass: f64) -> Result<Self> {
        Self::from_fn(grid, |x| 0.5 * mass * omega * omega * x * x)
    }

    /// `lambda x^4`.
    pub fn quartic(grid: &Grid1D, lambda: f64) -> Result<Self> {
        if lambda < 0.0 {
            return Err(Error::config("potential.lambda", "must be non-negative"));
        }
        Self::from_fn(grid, |x| lambda * x.powi(4))
    }

    /// Smooth well `-depth sech^2(x / width)`.
    pub fn well(grid: &Grid1D, depth: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::config("potential.width", "must be positive"));
        }
        Self::from_fn(grid, |x| -depth / (x / width).cosh().powi(2))
    }

    /// Linear interpolation of tabulated `(x, V)` pairs onto the grid.
    /// Tabulated abscissae must be increasing and cover every grid point.
    pub fn from_table(grid: &Grid1D, xs: &[f64], vs: &[f64]) -> Result<Self> {
        if xs.len() != vs.len() || xs.len() < 2 {
            return Err(Error::config(
                "potential.file",
                "need at least two (x, V) rows",
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::config(
                "potential.file",
                "x column must be strictly increasing",
            ));
        }
        let (lo, hi) = (xs[0], xs[xs.len() - 1]);
        let mut out = Vec::with_capacity(grid.len());
        for &x in grid.x_values() {
            if x < lo || x > hi {
                return Err(Error::config(
                    "potential.file",
                    format!("grid point x = {x} lies outside the table range [{lo}, {hi}]"),
                ));
            }
            let i = xs.partition_point(|&t| t <= x).clamp(1, xs.len() - 1);
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            out.push(vs[i - 1] + t * (vs[i] - vs[i - 1]));
        }
        Self::from_samples(grid, out)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    pub fn is_zero(&self) -> bool {
        self.identically_zero
    }
}

/// Symbols of every hybrid operator sampled on a grid's k-values.
#[derive(Debug, Clone)]
pub struct HybridOperatorSet {
    params: HybridParams,
    grid: Arc<Grid1D>,
    pi_symbol: Vec<f64>,
    kinetic_sym: Vec<f64>,
    vg_symbol: Vec<f64>,
    m_symbol: Vec<f64>,
    kinetic_fault: f64,
}

/// Samples all symbols on the grid.
///
/// When the grid reaches past half a band (`|ln q| k_max > pi`), the band
/// period must span at least 16 k-bins or the periodic symbol aliases.
pub fn build_operators(params: &HybridParams, grid: &Arc<Grid1D>) -> Result<HybridOperatorSet> {
    params.validate()?;
    let eps = params.eps().abs();
    if eps * grid.k_max() > std::f64::consts::PI && grid.dk() > params.band_period() / 16.0 {
        let needed_length = 16.0 * eps;
        let suggested = ((needed_length / grid.dx()).ceil() as usize).next_power_of_two();
        return Err(Error::config(
            "grid.n_points",
            format!(
                "band period 2pi/|ln q| = {:.4} spans fewer than 16 k-bins (dk = {:.4}); \
                 use n_points >= {suggested} at this spacing (box length >= {needed_length:.3})",
                params.band_period(),
                grid.dk()
            ),
        ));
    }
    let ks = grid.k_values();
    let lambda = params.commutator_prefactor();
    let dk = grid.dk();
    let m_symbol = ks
        .iter()
        .map(|&k| {
            let m = commutator_multiplier(params, params.hbar * k);
            if m.divergent {
                // Cell average of dPi/dk / (hbar lambda) over the bin.
                (hybrid_symbol(params, k + 0.5 * dk) - hybrid_symbol(params, k - 0.5 * dk))
                    / (dk * params.hbar * lambda)
            } else {
                m.value
            }
        })
        .collect();
    Ok(HybridOperatorSet {
        params: *params,
        grid: grid.clone(),
        pi_symbol: ks.iter().map(|&k| hybrid_symbol(params, k)).collect(),
        kinetic_sym: ks.iter().map(|&k| kinetic_symbol(params, k)).collect(),
        vg_symbol: ks.iter().map(|&k| group_velocity(params, k)).collect(),
        m_symbol,
        kinetic_fault: if cfg!(feature = "fault-injection") {
            KINETIC_FAULT
        } else {
            0.0
        },
    })
}

/// Result of the mixed-representation commutator.
#[derive(Debug, Clone)]
pub struct CommutatorAction {
    pub field: SpectralField,
    /// False when the input leaks into the box edges, where `x` is discontinuous.
    pub reliable: bool,
}

impl HybridOperatorSet {
    pub fn params(&self) -> &HybridParams {
        &self.params
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    pub fn pi_symbol(&self) -> &[f64] {
        &self.pi_symbol
    }

    pub fn kinetic_sym(&self) -> &[f64] {
        &self.kinetic_sym
    }

    pub fn vg_symbol(&self) -> &[f64] {
        &self.vg_symbol
    }

    pub fn m_symbol(&self) -> &[f64] {
        &self.m_symbol
    }

    /// Adds an anti-Hermitian `i f E(k)` part to the kinetic multiplier.
    /// Used to check that the Hermiticity diagnostics catch a broken symbol.
    #[doc(hidden)]
    pub fn with_kinetic_fault(mut self, f: f64) -> Self {
        self.kinetic_fault = f;
        self
    }

    fn check(&self, psi: &SpectralField) -> Result<()> {
        if psi.grid().same_as(&self.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn apply_momentum(&self, psi: &SpectralField) -> Result<SpectralField> {
        self.check(psi)?;
        psi.apply_multiplier(&self.pi_symbol)
    }

    pub fn apply_kinetic(&self, psi: &SpectralField) -> Result<SpectralField> {
        self.check(psi)?;
        if self.kinetic_fault == 0.0 {
            psi.apply_multiplier(&self.kinetic_sym)
        } else {
            let sym: Vec<Complex64> = self
                .kinetic_sym
                .iter()
                .map(|&e| Complex64::new(e, self.kinetic_fault * e))
                .collect();
            psi.apply_complex_multiplier(&sym)
        }
    }

    /// `K psi + V psi`; `None` means a free Hamiltonian.
    pub fn apply_hamiltonian(
        &self,
        potential: Option<&Potential>,
        psi: &SpectralField,
    ) -> Result<SpectralField> {
        let k = self.apply_kinetic(psi)?;
        match potential {
            Some(v) => k.add(&psi.multiply_pointwise(v.samples())?),
            None => Ok(k),
        }
    }

    /// Group-velocity operator `dE/d(hbar k)`.
    pub fn apply_velocity(&self, psi: &SpectralField) -> Result<SpectralField> {
        self.check(psi)?;
        psi.apply_multiplier(&self.vg_symbol)
    }

    /// `i hbar M(p) psi`, the right side of the commutator identity as stated.
    pub fn apply_commutator_multiplier(&self, psi: &SpectralField) -> Result<SpectralField> {
        self.check(psi)?;
        Ok(psi
            .apply_multiplier(&self.m_symbol)?
            .scale(Complex64::new(0.0, self.params.hbar)))
    }

    /// `(x p - p x) psi`, computed one representation at a time.
    pub fn commutator_x_p(&self, psi: &SpectralField) -> Result<CommutatorAction> {
        let xp = self.apply_momentum(psi)?.times_x();
        let px = self.apply_momentum(&psi.times_x())?;
        Ok(CommutatorAction {
            field: xp.sub(&px)?,
            reliable: !psi.leaks(),
        })
    }

    /// Generalized force `(i/hbar)[V, p] psi`; reduces to `-V'(x) psi` in
    /// the undeformed limit and generates `d<p>/dt`.
    pub fn force_field(&self, potential: &Potential, psi: &SpectralField) -> Result<SpectralField> {
        let v = potential.samples();
        let vp = self.apply_momentum(psi)?.multiply_pointwise(v)?;
        let pv = self.apply_momentum(&psi.multiply_pointwise(v)?)?;
        Ok(vp
            .sub(&pv)?
            .scale(Complex64::new(0.0, 1.0 / self.params.hbar)))
    }

    /// `K` applied to a unit impulse at `x_index`: one column of the
    /// non-local kinetic kernel.
    pub fn kernel_column(&self, x_index: usize) -> Result<Vec<Complex64>> {
        let n = self.grid.len();
        if x_index >= n {
            return Err(Error::Precondition(format!(
                "x_index {x_index} outside grid of {n} points"
            )));
        }
        let mut impulse = vec![Complex64::new(0.0, 0.0); n];
        impulse[x_index] = Complex64::new(1.0, 0.0);
        Ok(self
            .apply_kinetic(&SpectralField::from_position(self.grid.clone(), impulse)?)?
            .into_values())
    }

    /// `sum_k w(k) sym(k)` for a normalized spectral density `w`.
    pub fn spectral_mean(&self, psi: &SpectralField, sym: &[f64]) -> Result<f64> {
        self.check(psi)?;
        Ok(spectral_weights(psi)
            .iter()
            .zip(sym)
            .map(|(w, s)| w * s)
            .sum())
    }

    pub fn mean_kinetic(&self, psi: &SpectralField) -> Result<f64> {
        self.spectral_mean(psi, &self.kinetic_sym)
    }

    pub fn mean_velocity(&self, psi: &SpectralField) -> Result<f64> {
        self.spectral_mean(psi, &self.vg_symbol)
    }

    pub fn mean_momentum(&self, psi: &SpectralField) -> Result<f64> {
        self.spectral_mean(psi, &self.pi_symbol)
    }

    /// `<psi|V|psi> / <psi|psi>`.
    pub fn mean_potential(&self, potential: &Potential, psi: &SpectralField) -> Result<f64> {
        self.check(psi)?;
        let (mut num, mut den) = (0.0, 0.0);
        for (c, v) in psi.values().iter().zip(potential.samples()) {
            num += c.norm_sqr() * v;
            den += c.norm_sqr();
        }
        Ok(num / den)
    }
}

/// Relative symmetry defect `|<f, A g> - <A f, g>| / (|f| |g|)`.
pub fn hermiticity_defect(
    op: impl Fn(&SpectralField) -> Result<SpectralField>,
    f: &SpectralField,
    g: &SpectralField,
) -> Result<f64> {
    let lhs = f.inner(&op(g)?)?;
    let rhs = op(f)?.inner(g)?;
    Ok((lhs - rhs).norm() / (f.norm() * g.norm()))
}

/// `|p_beta p_gamma psi - p_{beta+gamma} psi|`.
///
/// The composed symbol carries `sgn(k)^2`, so the remainder vanishes on
/// positive-k support and equals twice the negative-k part otherwise.
pub fn semigroup_remainder(
    params: &HybridParams,
    grid: &Arc<Grid1D>,
    beta: f64,
    gamma: f64,
    psi: &SpectralField,
) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::config("semigroup.beta", "must be positive"));
    }
    if !(gamma > 0.0) {
        return Err(Error::config("semigroup.gamma", "must be positive"));
    }
    if beta + gamma > 2.0 {
        return Err(Error::config(
            "semigroup.gamma",
            "beta + gamma must not exceed 2",
        ));
    }
    if !psi.grid().same_as(grid) {
        return Err(Error::GridMismatch);
    }
    let ks = grid.k_values();
    let sym = |order: f64| -> Vec<f64> {
        ks.iter()
            .map(|&k| symbol_of_order(params, k, order))
            .collect()
    };
    let composed = psi
        .apply_multiplier(&sym(gamma))?
        .apply_multiplier(&sym(beta))?;
    let direct = psi.apply_multiplier(&sym(beta + gamma))?;
    Ok(composed.sub(&direct)?.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::states::{band_limited, gaussian, plane_wave, random_state};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sqm(alpha: f64) -> HybridParams {
        HybridParams::new(1.0 + 1e-8, alpha).unwrap()
    }

    #[test]
    fn symbol_arrays() {
        let g = make_grid(256, -20.0, 20.0).unwrap();
        let ops = build_operators(&sqm(2.0), &g).unwrap();
        for (e, k) in ops.kinetic_sym().iter().zip(g.k_values()) {
            let oracle = 0.5 * k * k;
            assert!((e - oracle).abs() <= 1e-6 * oracle.max(1e-300));
        }
        assert_eq!(ops.m_symbol()[0], 1.0);
        let p = HybridParams::new(2.0, 1.5).unwrap();
        let ops = build_operators(&p, &g).unwrap();
        assert!(ops
            .kinetic_sym()
            .iter()
            .all(|&e| (0.0..=p.e_max()).contains(&e)));
        for j in 1..g.len() {
            let m = g.mirror_bin(j);
            if m != j {
                assert_eq!(ops.pi_symbol()[j], -ops.pi_symbol()[m]);
            }
        }
        assert!(ops.m_symbol()[0].is_finite() && ops.m_symbol()[0] > 0.0);
    }

    #[test]
    fn band_resolution_is_enforced() {
        // Box of length 2 gives dk = pi, wider than a sixteenth of the band.
        let g = make_grid(64, -1.0, 1.0).unwrap();
        let err = build_operators(&HybridParams::new(2.0, 2.0).unwrap(), &g).unwrap_err();
        match err {
            Error::Config { field, reason } => {
                assert_eq!(field, "grid.n_points");
                assert!(reason.contains("n_points >="));
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn plane_waves_are_eigenfunctions() {
        let g = make_grid(128, -10.0, 10.0).unwrap();
        let p = HybridParams::new(1.4, 1.7).unwrap();
        let ops = build_operators(&p, &g).unwrap();
        let j = 7;
        let psi = plane_wave(&g, j).unwrap();
        let k = g.k_values()[j];
        let pp = ops.apply_momentum(&psi).unwrap();
        let kk = ops.apply_kinetic(&psi).unwrap();
        for ((a, b), c) in pp.values().iter().zip(kk.values()).zip(psi.values()) {
            assert!((a - c * hybrid_symbol(&p, k)).norm() < 1e-12);
            assert!((b - c * kinetic_symbol(&p, k)).norm() < 1e-12);
        }
    }

    #[test]
    fn undeformed_momentum_is_derivative() {
        let g = make_grid(512, -30.0, 30.0).unwrap();
        let ops = build_operators(&sqm(2.0), &g).unwrap();
        let psi = gaussian(&g, 1.0, 0.7, 1.5).unwrap();
        let pp = ops.apply_momentum(&psi).unwrap();
        // Analytic -i d/dx of the Gaussian.
        let s2 = 4.0 * 1.5 * 1.5;
        for ((a, c), &x) in pp.values().iter().zip(psi.values()).zip(g.x_values()) {
            let dlog = Complex64::new(-2.0 * (x - 1.0) / s2, 0.7);
            let oracle = Complex64::new(0.0, -1.0) * dlog * c;
            assert!((a - oracle).norm() < 1e-6);
        }
    }

    #[test]
    fn hermiticity_on_random_pairs() {
        let g = make_grid(256, -10.0, 10.0).unwrap();
        let v = Potential::harmonic(&g, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (q, a) in [(1.2, 1.2), (1.5, 1.6), (2.0, 2.0)] {
            let ops = build_operators(&HybridParams::new(q, a).unwrap(), &g).unwrap();
            for _ in 0..10 {
                let f = random_state(&g, &mut rng).unwrap();
                let h = random_state(&g, &mut rng).unwrap();
                assert!(hermiticity_defect(|x| ops.apply_momentum(x), &f, &h).unwrap() < 1e-11);
                assert!(hermiticity_defect(|x| ops.apply_kinetic(x), &f, &h).unwrap() < 1e-11);
                assert!(
                    hermiticity_defect(|x| ops.apply_hamiltonian(Some(&v), x), &f, &h).unwrap()
                        < 1e-11
                );
                assert!(hermiticity_defect(|x| ops.force_field(&v, x), &f, &h).unwrap() < 1e-11);
            }
        }
    }

    #[test]
    fn injected_fault_breaks_hermiticity() {
        let g = make_grid(128, -10.0, 10.0).unwrap();
        let ops = build_operators(&HybridParams::new(1.5, 1.6).unwrap(), &g)
            .unwrap()
            .with_kinetic_fault(KINETIC_FAULT);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_state(&g, &mut rng).unwrap();
        let h = random_state(&g, &mut rng).unwrap();
        assert!(hermiticity_defect(|x| ops.apply_kinetic(x), &f, &h).unwrap() > 1e-8);
    }

    #[test]
    fn constant_potential_shifts_energy() {
        let g = make_grid(256, -20.0, 20.0).unwrap();
        let ops = build_operators(&HybridParams::new(1.3, 1.5).unwrap(), &g).unwrap();
        let psi = gaussian(&g, 0.0, 1.0, 1.0).unwrap();
        let c = 2.5;
        let v = Potential::constant(&g, c).unwrap();
        let h = psi
            .inner(&ops.apply_hamiltonian(Some(&v), &psi).unwrap())
            .unwrap();
        let k = psi.inner(&ops.apply_kinetic(&psi).unwrap()).unwrap();
        assert!((h.re - k.re - c).abs() < 1e-12 && h.im.abs() < 1e-12);
        assert!((k.re - ops.mean_kinetic(&psi).unwrap()).abs() < 1e-12);
        assert!(ops.force_field(&v, &psi).unwrap().norm() < 1e-12);
    }

    #[test]
    fn commutator_matches_scaled_multiplier() {
        let g = make_grid(1024, -60.0, 60.0).unwrap();
        for (q, a) in [(1.2, 2.0), (1.5, 2.0), (1.3, 1.7)] {
            // For alpha < 2 the spectrum must stay clear of the cusp at k = 0.
            let k0 = if a < 2.0 { 2.0 } else { 0.0 };
            let psi = gaussian(&g, 0.0, k0, 4.0).unwrap();
            let p = HybridParams::new(q, a).unwrap();
            let ops = build_operators(&p, &g).unwrap();
            let c = ops.commutator_x_p(&psi).unwrap();
            assert!(c.reliable);
            let rhs = ops.apply_commutator_multiplier(&psi).unwrap();
            let lambda = p.commutator_prefactor();
            let corrected = rhs.scale(Complex64::new(lambda, 0.0));
            let gap = c.field.sub(&corrected).unwrap().norm();
            let tol = 1e-10;
            assert!(gap < tol, "q {q} alpha {a}: {gap}");
            // The unscaled identity misses by |1 - lambda|.
            let literal = c.field.sub(&rhs).unwrap().norm() / rhs.norm();
            assert!((literal - (1.0 - lambda).abs()).abs() < 1e-2, "{literal}");
        }
    }

    #[test]
    fn undeformed_commutator_is_canonical() {
        let g = make_grid(512, -30.0, 30.0).unwrap();
        let ops = build_operators(&sqm(2.0), &g).unwrap();
        let psi = gaussian(&g, 0.5, 1.0, 1.5).unwrap();
        let c = ops.commutator_x_p(&psi).unwrap().field;
        for (a, b) in c.values().iter().zip(psi.values()) {
            assert!((a - Complex64::new(0.0, 1.0) * b).norm() < 1e-6);
        }
        let phi = gaussian(&g, -2.0, -1.0, 2.0).unwrap();
        let combo = psi
            .scale(Complex64::new(0.3, 0.2))
            .add(&phi.scale(Complex64::new(-1.1, 0.0)))
            .unwrap();
        let lhs = ops.commutator_x_p(&combo).unwrap().field;
        let rhs = ops
            .commutator_x_p(&psi)
            .unwrap()
            .field
            .scale(Complex64::new(0.3, 0.2))
            .add(
                &ops.commutator_x_p(&phi)
                    .unwrap()
                    .field
                    .scale(Complex64::new(-1.1, 0.0)),
            )
            .unwrap();
        assert!(lhs.sub(&rhs).unwrap().norm() < 1e-12);
    }

    #[test]
    fn undeformed_force_is_minus_gradient() {
        let g = make_grid(512, -12.0, 12.0).unwrap();
        let ops = build_operators(&sqm(2.0), &g).unwrap();
        let v = Potential::harmonic(&g, 1.0, 1.0).unwrap();
        let psi = gaussian(&g, 0.5, 0.0, 1.0).unwrap();
        let f = ops.force_field(&v, &psi).unwrap();
        for ((a, b), &x) in f.values().iter().zip(psi.values()).zip(g.x_values()) {
            assert!((a + x * b).norm() < 1e-5);
        }
    }

    #[test]
    fn kernel_columns() {
        let g = make_grid(256, -20.0, 20.0).unwrap();
        let ops = build_operators(&HybridParams::new(1.2, 1.5).unwrap(), &g).unwrap();
        let (i, j) = (40, 131);
        let ci = ops.kernel_column(i).unwrap();
        let cj = ops.kernel_column(j).unwrap();
        assert!((ci[j] - cj[i].conj()).norm() < 1e-12);
        assert!(ops.kernel_column(256).is_err());

        // Undeformed alpha = 2: spectral second derivative, concentrated near the source.
        let ops = build_operators(&sqm(2.0), &g).unwrap();
        let c = ops.kernel_column(128).unwrap();
        let near: f64 = c[124..=132].iter().map(|z| z.norm_sqr()).sum();
        let total: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        assert!(near / total > 0.99);
    }

    #[test]
    fn semigroup_cases() {
        let g = make_grid(512, -40.0, 40.0).unwrap();
        let p = HybridParams::new(1.5, 2.0).unwrap();
        let kb = std::f64::consts::PI / p.eps();
        let pos = band_limited(&g, 0.1 * kb, 0.9 * kb, 0.0).unwrap();
        let r = semigroup_remainder(&p, &g, 0.7, 0.9, &pos).unwrap();
        assert!(r <= 1e-10 * pos.norm());
        let near = sqm(2.0);
        let pos1 = band_limited(&g, 0.2, 3.0, 0.0).unwrap();
        assert!(semigroup_remainder(&near, &g, 1.2, 0.6, &pos1).unwrap() <= 1e-6);
        let neg = band_limited(&g, -0.9 * kb, -0.1 * kb, 0.0).unwrap();
        let r = semigroup_remainder(&p, &g, 0.7, 0.9, &neg).unwrap();
        assert!(r > 0.1);
        assert!(semigroup_remainder(&p, &g, 1.5, 0.9, &neg).is_err());
        assert!(semigroup_remainder(&p, &g, 0.0, 0.9, &neg).is_err());
    }

    #[test]
    fn table_potential_interpolates() {
        let g = make_grid(16, -8.0, 8.0).unwrap();
        let v = Potential::from_table(&g, &[-10.0, 0.0, 10.0], &[10.0, 0.0, 20.0]).unwrap();
        assert_eq!(v.samples()[0], 8.0);
        assert_eq!(v.samples()[8], 0.0);
        assert_eq!(v.samples()[12], 8.0);
        assert_eq!(v.lower_bound(), 0.0);
        assert!(Potential::from_table(&g, &[-1.0, 10.0], &[0.0, 0.0]).is_err());
    }
}
