//! Fourier representation of periodic fields on the unit torus and the
//! operator calculus built on it: transforms, Leray projection, Bessel
//! potentials and norms, heat semigroup, derivatives and point evaluation.

mod fft;
mod field;
mod grid;
mod heat;
mod interp;
mod snapshot;

pub use fft::{fft_axis, fft_nd, Direction};
pub use field::{lp_norm, SpectralField};
pub use grid::TorusGrid;
pub use heat::{cosine_lq_norm, heat_estimate_ratio, heat_exponent, single_mode_heat_bound};
pub use interp::{evaluate_at_points, wrap_unit, InterpScheme, Interpolator, PointSet};
pub use snapshot::{decode_field, encode_field, read_field, write_field, FIELD_MAGIC};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("dimension {0} not supported (expected 1..=3)")]
    UnsupportedDimension(usize),
    #[error("grid size {0} must be even and at least 2")]
    OddResolution(usize),
    #[error("grid shape mismatch: expected {expected} samples, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("operation needs a {dim}-component vector field, got {components} components")]
    NotAVectorField { components: usize, dim: usize },
    #[error("operation needs a scalar field, got {0} components")]
    NotAScalarField(usize),
    #[error("fields live on different grids or have different component counts")]
    GridMismatch,
    #[error("time must be nonnegative, got {0}")]
    NegativeTime(f64),
    #[error("exponents must satisfy 1 <= r <= p, got p={p}, r={r}")]
    InvalidExponents { p: f64, r: f64 },
}
