//! Uniform periodic grids and the unitary discrete Fourier pair.
//!
//! Every operator in the crate is a multiplier in one of the two
//! representations held here. The transform uses the symmetric `1/sqrt(N)`
//! normalization so that Parseval holds without bookkeeping factors and real
//! multipliers are Hermitian under the discrete inner product
//! `<f, g> = sum conj(f) g dx`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Smallest supported grid.
pub const MIN_POINTS: usize = 16;

/// Number of edge cells inspected by [`SpectralField::boundary_leak`].
const EDGE_CELLS: usize = 2;

/// Amplitude ratio above which a field is considered to touch the box edges.
pub const BOUNDARY_LEAK_LIMIT: f64 = 1e-8;

/// Uniform position grid on `[x_min, x_max)` with its conjugate wavenumbers.
pub struct Grid1D {
    n: usize,
    x_min: f64,
    x_max: f64,
    dx: f64,
    x: Vec<f64>,
    k: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid1D")
            .field("n", &self.n)
            .field("x_min", &self.x_min)
            .field("x_max", &self.x_max)
            .finish()
    }
}

/// Builds a shared grid. `n_points` must be a power of two, at least 16.
pub fn make_grid(n_points: usize, x_min: f64, x_max: f64) -> Result<Arc<Grid1D>> {
    Grid1D::new(n_points, x_min, x_max).map(Arc::new)
}

impl Grid1D {
    pub fn new(n_points: usize, x_min: f64, x_max: f64) -> Result<Self> {
        if n_points < MIN_POINTS || !n_points.is_power_of_two() {
            return Err(Error::config(
                "grid.n_points",
                format!("{n_points} is not a power of two >= {MIN_POINTS}"),
            ));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::config(
                "grid.x_max",
                format!("box [{x_min}, {x_max}] is empty or not finite"),
            ));
        }
        let dx = (x_max - x_min) / n_points as f64;
        let dk = 2.0 * PI / (n_points as f64 * dx);
        let x = (0..n_points).map(|j| x_min + j as f64 * dx).collect();
        let k = (0..n_points)
            .map(|j| mode_number(j, n_points) as f64 * dk)
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Grid1D {
            n: n_points,
            x_min,
            x_max,
            dx,
            x,
            k,
            fft: planner.plan_fft_forward(n_points),
            ifft: planner.plan_fft_inverse(n_points),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length()
    }

    /// Largest representable |k|, attained only by the Nyquist bin.
    pub fn k_max(&self) -> f64 {
        PI / self.dx
    }

    pub fn x_values(&self) -> &[f64] {
        &self.x
    }

    /// Wavenumbers in transform order: `0, dk, ..., -N/2 dk, ..., -dk`.
    pub fn k_values(&self) -> &[f64] {
        &self.k
    }

    /// Signed mode number of bin `j`.
    pub fn mode(&self, j: usize) -> i64 {
        mode_number(j, self.n)
    }

    /// Bin index holding mode number `m`, if representable.
    pub fn bin_of_mode(&self, m: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if m < -half || m >= half {
            return None;
        }
        Some(if m >= 0 {
            m as usize
        } else {
            (m + self.n as i64) as usize
        })
    }

    /// Bin of the `k -> -k` partner. The Nyquist bin is its own partner.
    pub fn mirror_bin(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }

    /// Index of the grid point nearest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        let j = ((x - self.x_min) / self.dx).round();
        j.clamp(0.0, (self.n - 1) as f64) as usize
    }

    pub fn same_as(&self, other: &Grid1D) -> bool {
        std::ptr::eq(self, other)
            || (self.n == other.n && self.x_min == other.x_min && self.x_max == other.x_max)
    }

    /// Unitary forward transform of position samples.
    pub fn forward(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.fft.process(&mut buf);
        let s = 1.0 / (self.n as f64).sqrt();
        buf.iter_mut().for_each(|c| *c *= s);
        buf
    }

    /// Unitary inverse transform of spectral coefficients.
    pub fn inverse(&self, spectrum: &[Complex64]) -> Vec<Complex64> {
        let mut buf = spectrum.to_vec();
        self.ifft.process(&mut buf);
        let s = 1.0 / (self.n as f64).sqrt();
        buf.iter_mut().for_each(|c| *c *= s);
        buf
    }
}

fn mode_number(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

/// Complex samples on a grid, with a lazily computed spectral representation.
///
/// The spectrum holds unitary DFT coefficients `c_m`; `|c_m|^2` sums to
/// `sum |psi_j|^2`. Use [`SpectralField::spectral_density`] for the
/// continuum-normalized `|psi~(k)|^2`.
#[derive(Clone)]
pub struct SpectralField {
    grid: Arc<Grid1D>,
    values: Vec<Complex64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("grid", &self.grid)
            .field("norm", &self.norm())
            .finish()
    }
}

impl SpectralField {
    pub fn from_position(grid: Arc<Grid1D>, values: Vec<Complex64>) -> Result<Self> {
        check_len(grid.len(), values.len())?;
        Ok(SpectralField {
            grid,
            values,
            spectrum: OnceLock::new(),
        })
    }

    pub fn from_spectrum(grid: Arc<Grid1D>, spectrum: Vec<Complex64>) -> Result<Self> {
        check_len(grid.len(), spectrum.len())?;
        let values = grid.inverse(&spectrum);
        let cache = OnceLock::new();
        let _ = cache.set(spectrum);
        Ok(SpectralField {
            grid,
            values,
            spectrum: cache,
        })
    }

    pub fn zeros(grid: Arc<Grid1D>) -> Self {
        let n = grid.len();
        SpectralField {
            grid,
            values: vec![Complex64::new(0.0, 0.0); n],
            spectrum: OnceLock::new(),
        }
    }

    pub fn grid(&self) -> &Arc<Grid1D> {
        &self.grid
    }

    /// Position-representation samples.
    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Unitary spectral coefficients in transform order.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum
            .get_or_init(|| self.grid.forward(&self.values))
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// `|psi~(k)|^2` normalized so that `sum density * dk = sum |psi|^2 dx`.
    pub fn spectral_density(&self) -> Vec<f64> {
        let s = self.grid.dx() / self.grid.dk();
        self.spectrum().iter().map(|c| c.norm_sqr() * s).collect()
    }

    /// Discrete inner product `sum conj(self) * other * dx`.
    pub fn inner(&self, other: &SpectralField) -> Result<Complex64> {
        self.check_grid(other)?;
        let sum: Complex64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(sum * self.grid.dx())
    }

    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Returns `F^-1[sigma(k) F[psi]]` for a real multiplier.
    pub fn apply_multiplier(&self, sigma: &[f64]) -> Result<SpectralField> {
        check_len(self.grid.len(), sigma.len())?;
        let spec = self
            .spectrum()
            .iter()
            .zip(sigma)
            .map(|(c, s)| c * s)
            .collect();
        SpectralField::from_spectrum(self.grid.clone(), spec)
    }

    /// Returns `F^-1[sigma(k) F[psi]]` for a complex multiplier.
    pub fn apply_complex_multiplier(&self, sigma: &[Complex64]) -> Result<SpectralField> {
        check_len(self.grid.len(), sigma.len())?;
        let spec = self
            .spectrum()
            .iter()
            .zip(sigma)
            .map(|(c, s)| c * s)
            .collect();
        SpectralField::from_spectrum(self.grid.clone(), spec)
    }

    /// Pointwise multiplication by a real function sampled on the grid.
    pub fn multiply_pointwise(&self, f: &[f64]) -> Result<SpectralField> {
        check_len(self.grid.len(), f.len())?;
        let values = self.values.iter().zip(f).map(|(c, v)| c * v).collect();
        SpectralField::from_position(self.grid.clone(), values)
    }

    /// Position operator: multiplication by the grid coordinate.
    pub fn times_x(&self) -> SpectralField {
        let values = self
            .values
            .iter()
            .zip(self.grid.x_values())
            .map(|(c, x)| c * x)
            .collect();
        SpectralField {
            grid: self.grid.clone(),
            values,
            spectrum: OnceLock::new(),
        }
    }

    pub fn scale(&self, factor: Complex64) -> SpectralField {
        let values = self.values.iter().map(|c| c * factor).collect();
        SpectralField {
            grid: self.grid.clone(),
            values,
            spectrum: OnceLock::new(),
        }
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.combine(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.combine(other, |a, b| a - b)
    }

    fn combine(
        &self,
        other: &SpectralField,
        op: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<SpectralField> {
        self.check_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| op(*a, *b))
            .collect();
        SpectralField::from_position(self.grid.clone(), values)
    }

    /// Largest amplitude in the outermost cells relative to the peak amplitude.
    pub fn boundary_leak(&self) -> f64 {
        let peak = self.values.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        let n = self.values.len();
        let edge = self.values[..EDGE_CELLS]
            .iter()
            .chain(&self.values[n - EDGE_CELLS..])
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        edge / peak
    }

    pub fn leaks(&self) -> bool {
        self.boundary_leak() > BOUNDARY_LEAK_LIMIT
    }

    pub(crate) fn check_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: &Arc<Grid1D>, rng: &mut ChaCha8Rng) -> SpectralField {
        let v = (0..grid.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        SpectralField::from_position(grid.clone(), v).unwrap()
    }

    #[test]
    fn small_grid_spacings() {
        let g = make_grid(16, -8.0, 8.0).unwrap();
        assert_eq!(g.dx(), 1.0);
        assert!((g.dk() - 2.0 * PI / 16.0).abs() < 1e-15);
        assert_eq!(g.x_values()[3], -5.0);
    }

    #[test]
    fn max_wavenumber() {
        let g = make_grid(1024, -50.0, 50.0).unwrap();
        let kmax = g.k_values().iter().map(|k| k.abs()).fold(0.0, f64::max);
        assert!((kmax - PI * 1024.0 / 100.0).abs() < 1e-12);
        assert!((kmax - 32.17).abs() < 5e-3);
        assert_eq!(g.k_values().iter().filter(|k| **k == 0.0).count(), 1);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(
            make_grid(100, -1.0, 1.0),
            Err(Error::Config {
                field: "grid.n_points",
                ..
            })
        ));
        assert!(make_grid(8, -1.0, 1.0).is_err());
        assert!(matches!(
            make_grid(64, 1.0, 1.0),
            Err(Error::Config {
                field: "grid.x_max",
                ..
            })
        ));
    }

    #[test]
    fn constant_is_dc_spike() {
        let g = make_grid(64, -4.0, 4.0).unwrap();
        let f =
            SpectralField::from_position(g.clone(), vec![Complex64::new(1.0, 0.0); 64]).unwrap();
        let s = f.spectrum();
        assert!((s[0].re - 8.0).abs() < 1e-12);
        assert!(s[1..].iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn plane_wave_occupies_one_bin() {
        let g = make_grid(128, -10.0, 10.0).unwrap();
        for j in [1usize, 5, 70, 127] {
            let k = g.k_values()[j];
            let v = g
                .x_values()
                .iter()
                .map(|x| Complex64::from_polar(1.0, k * x))
                .collect();
            let f = SpectralField::from_position(g.clone(), v).unwrap();
            for (m, c) in f.spectrum().iter().enumerate() {
                if m == j {
                    assert!((c.norm() - (128f64).sqrt()).abs() < 1e-9);
                } else {
                    assert!(c.norm() < 1e-9, "bin {m} leaked {}", c.norm());
                }
            }
        }
    }

    #[test]
    fn gaussian_round_trip() {
        let g = make_grid(512, -20.0, 20.0).unwrap();
        let v: Vec<_> = g
            .x_values()
            .iter()
            .map(|x| Complex64::new((-x * x / 4.0).exp(), 0.0))
            .collect();
        let f = SpectralField::from_position(g.clone(), v.clone()).unwrap();
        let back = g.inverse(f.spectrum());
        let err: f64 = back
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let norm: f64 = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!(err / norm <= 1e-12);
    }

    #[test]
    fn parseval_on_random_fields() {
        let g = make_grid(256, -7.0, 9.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let f = random_field(&g, &mut rng);
            let lhs = f.norm_sqr();
            let rhs: f64 = f.spectral_density().iter().sum::<f64>() * g.dk();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs);
        }
    }

    #[test]
    fn identity_and_eigen_multipliers() {
        let g = make_grid(64, -5.0, 5.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let f = random_field(&g, &mut rng);
        let same = f.apply_multiplier(&vec![1.0; 64]).unwrap();
        let d = same.sub(&f).unwrap().norm();
        assert!(d <= 1e-13 * f.norm());

        let hbar = 0.7;
        let j = 9;
        let k = g.k_values()[j];
        let pw = SpectralField::from_position(
            g.clone(),
            g.x_values()
                .iter()
                .map(|x| Complex64::from_polar(1.0, k * x))
                .collect(),
        )
        .unwrap();
        let sym: Vec<f64> = g.k_values().iter().map(|k| hbar * k).collect();
        let out = pw.apply_multiplier(&sym).unwrap();
        let expect = pw.scale(Complex64::new(hbar * k, 0.0));
        assert!(out.sub(&expect).unwrap().norm() <= 1e-12 * expect.norm());
    }

    #[test]
    fn real_multiplier_is_hermitian() {
        let g = make_grid(128, -6.0, 6.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sigma: Vec<f64> = (0..128).map(|_| rng.random_range(-3.0..3.0)).collect();
        for _ in 0..20 {
            let f = random_field(&g, &mut rng);
            let h = random_field(&g, &mut rng);
            let lhs = f.inner(&h.apply_multiplier(&sigma).unwrap()).unwrap();
            let rhs = f.apply_multiplier(&sigma).unwrap().inner(&h).unwrap();
            assert!((lhs - rhs).norm() <= 1e-12 * f.norm() * h.norm() * 3.0);
            let diag = f.inner(&f.apply_multiplier(&sigma).unwrap()).unwrap();
            assert!(diag.im.abs() <= 1e-12 * f.norm_sqr() * 3.0);
        }
    }

    #[test]
    fn multipliers_compose() {
        let g = make_grid(128, -6.0, 6.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a: Vec<f64> = (0..128).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..128).map(|_| rng.random_range(-2.0..2.0)).collect();
        let ab: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
        let f = random_field(&g, &mut rng);
        let two = f
            .apply_multiplier(&a)
            .unwrap()
            .apply_multiplier(&b)
            .unwrap();
        let one = f.apply_multiplier(&ab).unwrap();
        assert!(two.sub(&one).unwrap().norm() <= 1e-13 * f.norm() * 4.0);
    }

    #[test]
    fn length_mismatch_is_shape_error() {
        let g = make_grid(32, -1.0, 1.0).unwrap();
        let f = SpectralField::zeros(g);
        assert_eq!(
            f.apply_multiplier(&[1.0; 16]).unwrap_err(),
            Error::Shape {
                expected: 32,
                got: 16
            }
        );
    }

    #[test]
    fn mismatched_grids_refuse_inner_product() {
        let a = SpectralField::zeros(make_grid(32, -1.0, 1.0).unwrap());
        let b = SpectralField::zeros(make_grid(32, -2.0, 2.0).unwrap());
        assert_eq!(a.inner(&b).unwrap_err(), Error::GridMismatch);
    }

    #[test]
    fn mode_bins_round_trip() {
        let g = make_grid(32, -1.0, 1.0).unwrap();
        for j in 0..32 {
            assert_eq!(g.bin_of_mode(g.mode(j)), Some(j));
            let m = g.mirror_bin(j);
            if j != 16 {
                assert_eq!(g.k_values()[m], -g.k_values()[j]);
            }
        }
        assert_eq!(g.bin_of_mode(16), None);
    }
}
