//! Bessel-heat smoothing estimate probe.

use std::f64::consts::PI;

use super::{lp_norm, SpectralError, SpectralField};

/// Scaled smoothing ratio
/// `||(I-Delta)^{gamma/2} grad^n e^{t Delta} f||_{L^p} (1 ^ t)^{e} / ||f||_{L^r}`
/// with `e = (gamma + n + d (1/r - 1/p)) / 2`.
///
/// `grad^n` is the full tensor of n-th partial derivatives of every component,
/// measured with the pointwise Euclidean norm.
pub fn heat_estimate_ratio(
    f: &SpectralField,
    gamma: f64,
    n: usize,
    p: f64,
    r: f64,
    t: f64,
) -> Result<f64, SpectralError> {
    if !(r >= 1.0 && r <= p) {
        return Err(SpectralError::InvalidExponents { p, r });
    }
    if !(t > 0.0) {
        return Err(SpectralError::NegativeTime(t));
    }
    let d = f.dim();
    let smoothed = f.heat_propagate(t)?.bessel_filter(gamma);
    let mut tensor = vec![smoothed];
    for _ in 0..n {
        tensor = tensor
            .iter()
            .flat_map(|h| (0..d).map(move |a| h.derivative(a)))
            .collect();
    }
    let samples: Vec<Vec<f64>> = tensor.iter().flat_map(|h| h.to_samples()).collect();
    let num = lp_norm(&samples, p);
    let den = lp_norm(&f.to_samples(), r);
    let e = heat_exponent(gamma, n, p, r, d);
    Ok(num * t.min(1.0).powf(e) / den)
}

pub fn heat_exponent(gamma: f64, n: usize, p: f64, r: f64, d: usize) -> f64 {
    let inv = |q: f64| if q.is_infinite() { 0.0 } else { 1.0 / q };
    0.5 * (gamma + n as f64 + d as f64 * (inv(r) - inv(p)))
}

/// `||cos(2 pi x)||_{L^q(T)}` by trapezoid quadrature (exact for even integer q).
pub fn cosine_lq_norm(q: f64) -> f64 {
    const M: usize = 4096;
    if q.is_infinite() {
        return 1.0;
    }
    let s: f64 = (0..M)
        .map(|i| (2.0 * PI * i as f64 / M as f64).cos().abs().powf(q))
        .sum();
    (s / M as f64).powf(1.0 / q)
}

/// Supremum over `t in (0,1]` of the ratio for the single mode `cos(2 pi x_1)`.
pub fn single_mode_heat_bound(gamma: f64, n: usize, p: f64, r: f64, d: usize) -> f64 {
    let e = heat_exponent(gamma, n, p, r, d);
    let lam = 4.0 * PI * PI;
    let amp = 2f64.powf(0.5 * gamma) * (2.0 * PI).powi(n as i32) * cosine_lq_norm(p) / cosine_lq_norm(r);
    let sup = if e <= 0.0 {
        1.0
    } else {
        let ts = (e / lam).min(1.0);
        ts.powf(e) * (-lam * ts).exp()
    };
    amp * sup
}
