//! Pseudo-spectral toolkit for hybrid (q, alpha)-deformed quantum mechanics.
//!
//! States live on a periodic grid; every deformed operator is diagonal in
//! Fourier space and is applied as a symbol multiplier.

// `!(x > 0.0)` is how validation rejects NaN along with non-positive input.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod dynamics;
pub mod error;
pub mod expansions;
pub mod grid;
pub mod operators;
pub mod special;
pub mod states;
pub mod symbols;
pub mod uncertainty;

pub use dynamics::{evolve, EvolutionConfig, EvolutionTrace, Splitting};
pub use error::{Error, Result};
pub use expansions::{ExpansionInput, ExpansionVariant};
pub use grid::{make_grid, Grid1D, SpectralField};
pub use operators::{build_operators, HybridOperatorSet, Potential};
pub use states::{gaussian, moments, two_mode_superposition, MomentSet, WaveFunction};
pub use symbols::{EffectiveMass, HybridParams};
pub use uncertainty::{exact_bound, UncertaintyReport};
