//! The stochastic particle system: ensemble state, counter-based noise,
//! the exponential velocity update and deposition of the mollified
//! empirical measure and its moments.

mod deposit;
mod ensemble;
mod init;
mod snapshot;

pub use deposit::{deposit_x, drag_forcing, empirical_density, empirical_moments, XWeights};
pub use ensemble::{noise, sigma_schedule, ParticleEnsemble};
pub use init::{sample_from_density, InitialLaw, SpatialLaw, VelocityLaw};
pub use snapshot::{decode_particles, encode_particles, read_particles, write_particles, PARTICLE_MAGIC};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParticleError {
    #[error("sigma schedule needs N >= 2, got {0}")]
    TooFewParticles(usize),
    #[error("non-finite value at particle {index} during step {step}")]
    NonFinite { index: usize, step: u64 },
    #[error("phase grid too coarse for the kernel: {0}")]
    Resolution(String),
    #[error("initial law: {0}")]
    InitialLaw(String),
    #[error("{0}")]
    Shape(String),
}
