//! Bessel-type special functions needed by the kernels.

use std::f64::consts::PI;

/// Ratio `I_k(kappa) / I_0(kappa)` of modified Bessel functions of the first kind.
///
/// Both are computed from the scaled integral
/// `I_k(kappa) e^{-kappa} = (1/pi) int_0^pi e^{kappa (cos t - 1)} cos(k t) dt`
/// with the trapezoid rule, which is spectrally accurate for this periodic integrand.
pub fn bessel_i_ratio(k: u64, kappa: f64) -> f64 {
    if kappa == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    let ik = scaled_bessel_i(k, kappa);
    let i0 = scaled_bessel_i(0, kappa);
    (ik / i0).max(0.0)
}

/// `I_k(kappa) e^{-kappa}`.
pub fn scaled_bessel_i(k: u64, kappa: f64) -> f64 {
    let m = trapezoid_points(k as f64 + kappa + 10.0 * kappa.sqrt());
    let h = PI / m as f64;
    let mut s = 0.0;
    for j in 0..=m {
        let t = j as f64 * h;
        let w = if j == 0 || j == m { 0.5 } else { 1.0 };
        s += w * (kappa * (t.cos() - 1.0)).exp() * (k as f64 * t).cos();
    }
    s * h / PI
}

/// Bessel function `J_n(z)` for integer order via Bessel's integral.
pub fn bessel_j_int(n: u32, z: f64) -> f64 {
    let m = trapezoid_points(z.abs() + n as f64);
    let h = PI / m as f64;
    let mut s = 0.0;
    for j in 0..=m {
        let t = j as f64 * h;
        let w = if j == 0 || j == m { 0.5 } else { 1.0 };
        s += w * (n as f64 * t - z * t.sin()).cos();
    }
    s * h / PI
}

/// Spherical Bessel `j_l(z)` by upward recurrence, stable for `z > l`.
pub fn spherical_bessel_j(l: u32, z: f64) -> f64 {
    let (s, c) = z.sin_cos();
    let mut j0 = s / z;
    if l == 0 {
        return j0;
    }
    let mut j1 = s / (z * z) - c / z;
    for m in 1..l {
        let j2 = (2 * m + 1) as f64 / z * j1 - j0;
        j0 = j1;
        j1 = j2;
    }
    j1
}

fn trapezoid_points(scale: f64) -> usize {
    (2.0 * scale + 64.0).ceil() as usize
}

/// `Gamma(nu + 1)` for integer or half-integer `nu >= 0`.
pub fn gamma_plus_one(nu: f64) -> f64 {
    let twice = (2.0 * nu).round() as i64;
    assert!(twice >= 0 && (2.0 * nu - twice as f64).abs() < 1e-12, "nu must be a half-integer");
    // g = Gamma(x + 1)
    let (mut g, mut x) = if twice % 2 == 0 { (1.0, 0.0) } else { (PI.sqrt() / 2.0, 0.5) };
    while x < nu - 1e-9 {
        x += 1.0;
        g *= x;
    }
    g
}

/// Normalized Fourier transform of the radial profile `(1 - |v|^2)^4_+` in `d` dimensions,
/// `2^nu Gamma(nu+1) J_nu(b) / b^nu` with `nu = d/2 + 4`; equals 1 at `b = 0`.
pub fn bump_fourier(d: usize, b: f64) -> f64 {
    let nu = d as f64 / 2.0 + 4.0;
    let b = b.abs();
    if b <= 12.0 {
        // power series, at most a few digits of cancellation on this range
        let x = -0.25 * b * b;
        let mut term = 1.0;
        let mut sum = 1.0;
        for m in 1..200 {
            let mf = m as f64;
            term *= x / (mf * (mf + nu));
            sum += term;
            if term.abs() < 1e-18 * sum.abs().max(1e-300) && m > 5 {
                break;
            }
        }
        return sum;
    }
    let jnu = if d % 2 == 0 {
        bessel_j_int(nu as u32, b)
    } else {
        let l = (nu - 0.5).round() as u32;
        (2.0 * b / PI).sqrt() * spherical_bessel_j(l, b)
    };
    2f64.powf(nu) * gamma_plus_one(nu) * jnu / b.powf(nu)
}
