use num_complex::Complex64;
use serde::Serialize;

use super::evolve_free;
use crate::error::{Error, Result};
use crate::grid::{Grid1D, SpectralField};
use crate::operators::HybridOperatorSet;

/// `G(x, t; x_source, 0)` on the grid: the free evolution of a discrete
/// delta of unit mass (`1/dx` at the source).
pub fn propagator_slice(
    ops: &HybridOperatorSet,
    t: f64,
    x_source_index: usize,
) -> Result<Vec<Complex64>> {
    if !(t >= 0.0) {
        return Err(Error::Precondition(format!(
            "propagator time {t} must be non-negative"
        )));
    }
    let grid = ops.grid();
    if x_source_index >= grid.len() {
        return Err(Error::Precondition(format!(
            "source index {x_source_index} outside the grid"
        )));
    }
    let mut impulse = vec![Complex64::new(0.0, 0.0); grid.len()];
    impulse[x_source_index] = Complex64::new(1.0 / grid.dx(), 0.0);
    let field = SpectralField::from_position(grid.clone(), impulse)?;
    Ok(evolve_free(&field, ops, t)?.into_values())
}

/// Log-log slope of `|G|` against distance from the source.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    /// Fit of `|G|` itself.
    pub raw_slope: f64,
    /// Fit of `|G_j + G_{j+1}| / 2`. Averaging neighbours cancels the
    /// `(-1)^j` lattice mode radiated by the kink of the periodic symbol at
    /// the zone edge, which otherwise decays as `|x|^-2` and masks the tail.
    pub averaged_slope: f64,
    pub n_points: usize,
}

/// Fits the tail on `lo <= x - x_source <= hi`.
pub fn tail_slope(
    g: &[Complex64],
    grid: &Grid1D,
    x_source_index: usize,
    lo: f64,
    hi: f64,
) -> Result<TailFit> {
    if !(0.0 < lo && lo < hi) {
        return Err(Error::Precondition("tail window needs 0 < lo < hi".into()));
    }
    let x0 = grid.x_values()[x_source_index];
    let xs = grid.x_values();
    let (mut raw, mut avg) = (vec![], vec![]);
    for j in x_source_index..g.len() {
        let r = xs[j] - x0;
        if (lo..=hi).contains(&r) {
            raw.push((r.ln(), g[j].norm().ln()));
        }
        if j + 1 < g.len() {
            let rm = r + 0.5 * grid.dx();
            if (lo..=hi).contains(&rm) {
                avg.push((rm.ln(), (0.5 * (g[j] + g[j + 1])).norm().ln()));
            }
        }
    }
    if raw.len() < 3 {
        return Err(Error::Precondition(format!(
            "tail window [{lo}, {hi}] holds fewer than three grid points"
        )));
    }
    Ok(TailFit {
        raw_slope: ls_slope(&raw),
        averaged_slope: ls_slope(&avg),
        n_points: raw.len(),
    })
}

fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::operators::build_operators;
    use crate::symbols::{kinetic_symbol, HybridParams};
    use std::f64::consts::PI;

    #[test]
    fn starts_as_delta() {
        let g = make_grid(64, -10.0, 10.0).unwrap();
        let ops = build_operators(&HybridParams::new(1.3, 1.5).unwrap(), &g).unwrap();
        let col = propagator_slice(&ops, 0.0, 20).unwrap();
        for (j, c) in col.iter().enumerate() {
            let expect = if j == 20 { 1.0 / g.dx() } else { 0.0 };
            assert!((c - Complex64::new(expect, 0.0)).norm() < 1e-12);
        }
        assert!(propagator_slice(&ops, -1.0, 0).is_err());
        assert!(propagator_slice(&ops, 1.0, 64).is_err());
    }

    #[test]
    fn matches_direct_mode_sum() {
        let g = make_grid(256, -20.0, 20.0).unwrap();
        let p = HybridParams::new(1.3, 1.5).unwrap();
        let ops = build_operators(&p, &g).unwrap();
        let (src, t) = (100, 0.7);
        let col = propagator_slice(&ops, t, src).unwrap();
        let x0 = g.x_values()[src];
        for (j, c) in col.iter().enumerate().step_by(7) {
            let r = g.x_values()[j] - x0;
            let direct: Complex64 = (0..g.len() as i64)
                .map(|m| {
                    let k = 2.0 * PI * (m - g.len() as i64 / 2) as f64 / g.length();
                    Complex64::from_polar(1.0, k * r - kinetic_symbol(&p, k) * t)
                })
                .sum::<Complex64>()
                / g.length();
            assert!((c - direct).norm() < 1e-10, "{j}: {c} vs {direct}");
        }
    }

    #[test]
    fn undeformed_kernel_magnitude() {
        let g = make_grid(4096, -200.0, 200.0).unwrap();
        let ops = build_operators(&HybridParams::new(1.0 + 1e-8, 2.0).unwrap(), &g).unwrap();
        let (src, t) = (2048, 1.0);
        let col = propagator_slice(&ops, t, src).unwrap();
        let expect = 1.0 / (2.0 * PI * t);
        // The band edge adds a Fresnel ripple of relative size about
        // 2 / (sqrt(2 pi t) (k_max - r/t)); 0.1 covers it inside the window.
        let window = 0.25 * g.k_max() * t;
        let mut worst = 0.0f64;
        for (j, c) in col.iter().enumerate() {
            let r = (g.x_values()[j] - g.x_values()[src]).abs();
            if r <= window {
                worst = worst.max((c.norm_sqr() / expect - 1.0).abs());
            }
        }
        assert!(worst < 0.1, "{worst}");
    }

    #[test]
    fn slope_of_a_power_law() {
        let g = make_grid(1024, -100.0, 100.0).unwrap();
        let src = 512;
        let x0 = g.x_values()[src];
        let col: Vec<Complex64> = g
            .x_values()
            .iter()
            .map(|&x| Complex64::new(((x - x0).abs() + 1e-9).powf(-2.5), 0.0))
            .collect();
        let fit = tail_slope(&col, &g, src, 5.0, 50.0).unwrap();
        assert!((fit.raw_slope + 2.5).abs() < 1e-9);
        assert!((fit.averaged_slope + 2.5).abs() < 1e-3);
    }
}
