//! Shared fixtures for the criterion benchmarks under `benches/`.

use hybridqm::{
    build_operators, gaussian, make_grid, HybridOperatorSet, HybridParams, Potential, WaveFunction,
};

pub struct Fixture {
    pub ops: HybridOperatorSet,
    pub psi: WaveFunction,
    pub potential: Potential,
}

/// A displaced Gaussian in a quartic well on `n` points over `[-20, 20]`.
pub fn fixture(n: usize) -> Fixture {
    let params = HybridParams::new(1.3, 1.7).expect("valid parameters");
    let grid = make_grid(n, -20.0, 20.0).expect("valid grid");
    let ops = build_operators(&params, &grid).expect("operators");
    let psi = gaussian(&grid, 1.0, 0.5, 1.5).expect("state");
    let potential = Potential::quartic(&grid, 0.1).expect("potential");
    Fixture {
        ops,
        psi,
        potential,
    }
}
