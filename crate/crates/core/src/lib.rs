//! Stochastic kinetic particles coupled to incompressible Navier-Stokes
//! through a mollified drag force, the limiting Vlasov(-Fokker-Planck)-
//! Navier-Stokes system, and the error functionals that quantify how the
//! particle system approaches the limit.
//!
//! Modules, bottom-up:
//!
//! - [`spectral`]: Fourier fields on the unit torus and their operators.
//! - [`mollifier`]: the phase-space mollifier family and the velocity cut-off.
//! - [`particles`]: the particle ensemble, its stepping and deposition.
//! - [`fluid`]: the Navier-Stokes stepper and the fluid/particle coupling.
//! - [`vfp`]: the kinetic solver on a truncated phase-space grid.
//! - [`metrics`]: error functionals and rate fitting.
//! - [`harness`]: configuration, runs, studies and persistence.

pub mod fluid;
pub mod harness;
pub mod metrics;
pub mod mollifier;
pub mod particles;
pub mod spectral;
pub mod vfp;

mod binio;

pub use binio::write_atomic;
