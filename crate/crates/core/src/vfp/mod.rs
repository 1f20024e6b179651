//! Kinetic solver for the limit density on a truncated phase-space grid.

mod density;
mod mollify;
mod solver;

pub use density::{
    decode_density, encode_density, read_density, write_density, Moments, PhaseGrid, PhaseSpaceDensity, PHASE_MAGIC,
};
pub use mollify::mollify_density;
pub use solver::{
    limit_coupled_step, transport_velocity, vfp_step, StepReport, VfpSolver, BOUNDARY_MASS_LIMIT,
};

use thiserror::Error;

use crate::fluid::FluidError;
use crate::mollifier::special::gamma_plus_one;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VfpError {
    #[error("phase grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Fluid(#[from] FluidError),
}

/// `exp(T (1 + 2k sup|u| + 2k^2 sigma^2))`, the growth allowed for `||<v>^k F||^2`.
pub fn weighted_growth_bound(k: f64, u_sup: f64, sigma: f64, t: f64) -> f64 {
    (t * (1.0 + 2.0 * k * u_sup + 2.0 * k * k * sigma * sigma)).exp()
}

/// `(int <v>^{-2k} dv)^{1/2}` over `R^d`, the constant bounding `||m_0 f||` by `||<v>^k f||`.
pub fn bracket_constant(d: usize, k: u32) -> f64 {
    let h = d as f64 / 2.0;
    let k = f64::from(k);
    assert!(k > h, "weight must be integrable");
    // pi^{d/2} Gamma(k - d/2) / Gamma(k)
    let num = gamma_plus_one(k - h) / (k - h);
    let den = gamma_plus_one(k - 1.0);
    (std::f64::consts::PI.powf(h) * num / den).sqrt()
}
