//! Error functionals between particle, auxiliary and limit runs, and the
//! empirical rate fits applied to them.

mod fit;
mod record;

pub use fit::{bootstrap_slope_ci, rate_fit, spearman, RateFit};
pub use record::ErrorRecord;

use thiserror::Error;

use crate::mollifier::MollifierFamily;
use crate::particles::ParticleEnsemble;
use crate::spectral::{SpectralError, SpectralField};
use crate::vfp::{mollify_density, PhaseSpaceDensity, VfpError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Vfp(#[from] VfpError),
    #[error("snapshot streams are misaligned: {0}")]
    Misaligned(String),
    #[error("particle streams are not coupled: {0}")]
    StreamMismatch(String),
    #[error("rate fit: {0}")]
    Fit(String),
}

/// `||u1 - u2||_{gamma,p}`.
pub fn bessel_error(u1: &SpectralField, u2: &SpectralField, gamma: f64, p: f64) -> Result<f64, MetricsError> {
    Ok(u1.sub(u2)?.bessel_norm(gamma, p))
}

/// `||u1 - u2||_{L^2}`.
pub fn energy_error(u1: &SpectralField, u2: &SpectralField) -> Result<f64, MetricsError> {
    Ok(u1.sub(u2)?.l2_norm())
}

/// `||grad(u1 - u2)||_{L^2}^2`.
pub fn gradient_error_sq(u1: &SpectralField, u2: &SpectralField) -> Result<f64, MetricsError> {
    Ok(crate::fluid::dissipation(&u1.sub(u2)?))
}

/// `||<v>^k (F1 - F2)||_{L^2}`.
pub fn weighted_error(f1: &PhaseSpaceDensity, f2: &PhaseSpaceDensity, k: f64) -> Result<f64, MetricsError> {
    Ok(f1.weighted_l2_distance(f2, k)?)
}

/// Trapezoidal `int g dt` over sample times.
pub fn time_integral(ts: &[f64], g: &[f64]) -> f64 {
    ts.windows(2)
        .zip(g.windows(2))
        .map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] + y[1]))
        .sum()
}

fn check_aligned(a: &[f64], b: &[f64]) -> Result<(), MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::Misaligned(format!("{} vs {} snapshots", a.len(), b.len())));
    }
    for (i, (s, t)) in a.iter().zip(b).enumerate() {
        if (s - t).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(MetricsError::Misaligned(format!("snapshot {i} at t={s} vs t={t}")));
        }
    }
    Ok(())
}

fn field_times(u: &[SpectralField], ts: &[f64]) -> Result<(), MetricsError> {
    if u.len() != ts.len() {
        return Err(MetricsError::Misaligned("field and time lists differ in length".into()));
    }
    Ok(())
}

/// Snapshot stream of a fluid-kinetic run at shared times.
#[derive(Debug, Clone)]
pub struct Stream<'a> {
    pub t: &'a [f64],
    pub u: &'a [SpectralField],
    pub f: &'a [PhaseSpaceDensity],
}

/// `rho_N = (sup_t ||u_aux - u||^2_{gamma,p} + sup_t ||<v>^k (F_aux * theta - F)||^2)^{1/2}`.
///
/// `fam = None` replaces the mollification by the identity.
pub fn rho_n(
    aux: &Stream<'_>,
    limit: &Stream<'_>,
    fam: Option<&MollifierFamily>,
    gamma: f64,
    p: f64,
    k: f64,
) -> Result<f64, MetricsError> {
    check_aligned(aux.t, limit.t)?;
    field_times(aux.u, aux.t)?;
    field_times(limit.u, limit.t)?;
    if aux.f.len() != aux.t.len() || limit.f.len() != limit.t.len() {
        return Err(MetricsError::Misaligned("density and time lists differ in length".into()));
    }
    let mut su: f64 = 0.0;
    let mut sf: f64 = 0.0;
    for i in 0..aux.t.len() {
        su = su.max(bessel_error(&aux.u[i], &limit.u[i], gamma, p)?);
        let m = match fam {
            Some(fam) => mollify_density(&aux.f[i], fam)?,
            None => aux.f[i].clone(),
        };
        sf = sf.max(weighted_error(&m, &limit.f[i], k)?);
    }
    Ok((su * su + sf * sf).sqrt())
}

/// `rho~_N = sup_t ||<v>^k (F_aux * theta - F_aux)||`.
pub fn rho_tilde_n(f_aux: &[PhaseSpaceDensity], fam: Option<&MollifierFamily>, k: f64) -> Result<f64, MetricsError> {
    let mut s: f64 = 0.0;
    for f in f_aux {
        if let Some(fam) = fam {
            s = s.max(weighted_error(&mollify_density(f, fam)?, f, k)?);
        }
    }
    Ok(s)
}

/// Distance on `T^d x R^d`: shortest periodic displacement in `x`, Euclidean in `v`.
pub fn phase_distance(x1: &[f64], v1: &[f64], x2: &[f64], v2: &[f64]) -> f64 {
    let mut s = 0.0;
    for (a, b) in x1.iter().zip(x2) {
        let mut dx = (a - b).rem_euclid(1.0);
        if dx > 0.5 {
            dx = 1.0 - dx;
        }
        s += dx * dx;
    }
    for (a, b) in v1.iter().zip(v2) {
        s += (a - b) * (a - b);
    }
    s.sqrt()
}

/// `max_i` distance between a particle system and its noise-coupled limit copies.
///
/// Both ensembles must share seed, size and step counter, so particle `i` of each
/// has consumed exactly the same Brownian increments.
pub fn chaos_distance(coupled: &ParticleEnsemble, limit: &ParticleEnsemble) -> Result<f64, MetricsError> {
    if coupled.seed != limit.seed {
        return Err(MetricsError::StreamMismatch(format!("seeds {} and {}", coupled.seed, limit.seed)));
    }
    if coupled.len() != limit.len() || coupled.dim() != limit.dim() {
        return Err(MetricsError::StreamMismatch("ensemble shapes differ".into()));
    }
    if coupled.step != limit.step {
        return Err(MetricsError::StreamMismatch(format!("steps {} and {}", coupled.step, limit.step)));
    }
    Ok((0..coupled.len())
        .map(|i| phase_distance(coupled.position(i), coupled.velocity(i), limit.position(i), limit.velocity(i)))
        .fold(0.0, f64::max))
}

/// `max_i sup_t` over aligned ensemble snapshots.
pub fn chaos_error(coupled: &[ParticleEnsemble], limit: &[ParticleEnsemble]) -> Result<f64, MetricsError> {
    if coupled.len() != limit.len() {
        return Err(MetricsError::Misaligned(format!("{} vs {} snapshots", coupled.len(), limit.len())));
    }
    coupled
        .iter()
        .zip(limit)
        .try_fold(0.0, |m, (a, b)| Ok(f64::max(m, chaos_distance(a, b)?)))
}

#[cfg(test)]
mod tests;
