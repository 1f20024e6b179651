//! Phase-space mollifiers, the mollified delta and the smooth velocity cut-off.

mod cutoff;
mod family;
pub mod special;

pub use cutoff::CutoffSpec;
pub use family::{MollifierFamily, XKernelKind};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MollifierError {
    #[error("Assumption 2(a): {0}")]
    Assumption(String),
    #[error("invalid mollifier parameter: {0}")]
    Parameter(String),
}
