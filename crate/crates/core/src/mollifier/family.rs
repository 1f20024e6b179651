use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::special::{bessel_i_ratio, bump_fourier, scaled_bessel_i};
use super::MollifierError;
use crate::spectral::TorusGrid;

/// Profile of the spatial kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum XKernelKind {
    /// Periodic von Mises profile `exp(kappa (cos 2 pi x - 1))`, one factor per axis.
    #[default]
    VonMises,
    /// Compact bump `(1 - 4 x^2)^4` on `|x| < 1/2`, scaled by `N^beta`, one factor per axis.
    Bump,
}

/// Log-ratio below the peak at which the von Mises kernel is truncated for deposition.
const VM_TAIL_LOG: f64 = 20.0;

/// Phase-space mollifier `theta^N(x, v) = theta^{1,N}(x) theta^{2,N}(v)`.
///
/// The spatial factor has bandwidth parameter `N^beta`, the velocity factor is the
/// bump `c_d (1 - |v|^2)^4_+` rescaled to the ball of radius `N^{-alpha}`.
#[derive(Debug, Clone, PartialEq)]
pub struct MollifierFamily {
    alpha: f64,
    beta: f64,
    n: u64,
    dim: usize,
    x_kind: XKernelKind,
    scale: f64,
    kappa: f64,
    i0e: f64,
    radius: f64,
    v_norm: f64,
}

impl MollifierFamily {
    /// Builds the family, enforcing `alpha > beta` and `d beta + (d+1) alpha < 1/2`.
    pub fn new(alpha: f64, beta: f64, n: u64, dim: usize) -> Result<Self, MollifierError> {
        let fam = Self::relaxed(alpha, beta, n, dim)?;
        if alpha <= beta {
            return Err(MollifierError::Assumption(format!(
                "alpha > beta violated: alpha={alpha}, beta={beta}"
            )));
        }
        let lhs = dim as f64 * beta + (dim as f64 + 1.0) * alpha;
        if lhs >= 0.5 {
            return Err(MollifierError::Assumption(format!(
                "d*beta + (d+1)*alpha < 1/2 violated: {lhs} >= 0.5"
            )));
        }
        Ok(fam)
    }

    /// Builds the family with only `alpha, beta in (0, 1]` checked.
    pub fn relaxed(alpha: f64, beta: f64, n: u64, dim: usize) -> Result<Self, MollifierError> {
        for (name, v) in [("alpha", alpha), ("beta", beta)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(MollifierError::Parameter(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        if n == 0 {
            return Err(MollifierError::Parameter("N must be at least 1".into()));
        }
        if !(1..=3).contains(&dim) {
            return Err(MollifierError::Parameter(format!("dimension {dim} not supported")));
        }
        let scale = (n as f64).powf(beta);
        let radius = (n as f64).powf(-alpha);
        let unit_ball_integral = match dim {
            1 => 256.0 / 315.0,
            2 => PI / 5.0,
            _ => 1536.0 * PI / 10395.0,
        };
        Ok(Self {
            alpha,
            beta,
            n,
            dim,
            x_kind: XKernelKind::VonMises,
            scale,
            kappa: scale,
            i0e: scaled_bessel_i(0, scale),
            radius,
            v_norm: 1.0 / (unit_ball_integral * radius.powi(dim as i32)),
        })
    }

    pub fn with_x_kernel(mut self, kind: XKernelKind) -> Self {
        self.x_kind = kind;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x_kind(&self) -> XKernelKind {
        self.x_kind
    }

    /// `N^beta`.
    pub fn x_scale(&self) -> f64 {
        self.scale
    }

    /// Von Mises concentration.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Velocity support radius `N^{-alpha}`.
    pub fn v_radius(&self) -> f64 {
        self.radius
    }

    /// One-axis spatial kernel at a torus coordinate.
    pub fn theta1_axis(&self, x: f64) -> f64 {
        let x = x - x.round();
        match self.x_kind {
            XKernelKind::VonMises => (self.kappa * ((2.0 * PI * x).cos() - 1.0)).exp() / self.i0e,
            XKernelKind::Bump => {
                let y = self.scale * x;
                if y.abs() >= 0.5 {
                    0.0
                } else {
                    self.scale * (315.0 / 128.0) * (1.0 - 4.0 * y * y).powi(4)
                }
            }
        }
    }

    pub fn theta1_axis_prime(&self, x: f64) -> f64 {
        let x = x - x.round();
        match self.x_kind {
            XKernelKind::VonMises => -2.0 * PI * self.kappa * (2.0 * PI * x).sin() * self.theta1_axis(x),
            XKernelKind::Bump => {
                let y = self.scale * x;
                if y.abs() >= 0.5 {
                    0.0
                } else {
                    self.scale * self.scale * (315.0 / 128.0) * 4.0 * (1.0 - 4.0 * y * y).powi(3) * (-8.0 * y)
                }
            }
        }
    }

    /// `theta^{1,N}(x)` on the torus.
    pub fn theta1(&self, x: &[f64]) -> f64 {
        x.iter().map(|&c| self.theta1_axis(c)).product()
    }

    pub fn theta1_gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|a| {
                x.iter()
                    .enumerate()
                    .map(|(b, &c)| if a == b { self.theta1_axis_prime(c) } else { self.theta1_axis(c) })
                    .product()
            })
            .collect()
    }

    /// Fourier coefficient of the one-axis kernel at integer wavenumber `k`.
    pub fn theta1_coeff(&self, k: i64) -> f64 {
        match self.x_kind {
            XKernelKind::VonMises => bessel_i_ratio(k.unsigned_abs(), self.kappa),
            XKernelKind::Bump => bump_fourier(1, 2.0 * PI * k as f64 * 0.5 / self.scale),
        }
    }

    /// Coefficients `rho_k` for every FFT index of an axis with `n` points.
    pub fn theta1_coeff_table(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| {
                let k = if i < n / 2 { i as i64 } else { i as i64 - n as i64 };
                self.theta1_coeff(k)
            })
            .collect()
    }

    /// `theta^{2,N}(v)`.
    pub fn theta2(&self, v: &[f64]) -> f64 {
        let r2: f64 = v.iter().map(|c| c * c).sum::<f64>() / (self.radius * self.radius);
        if r2 >= 1.0 {
            0.0
        } else {
            self.v_norm * (1.0 - r2).powi(4)
        }
    }

    /// Fourier transform `int theta^{2,N}(v) e^{-2 pi i xi.v} dv` at `|xi|`.
    pub fn theta2_fourier(&self, xi_norm: f64) -> f64 {
        bump_fourier(self.dim, 2.0 * PI * xi_norm * self.radius)
    }

    /// `theta^N(x, v)`.
    pub fn theta(&self, x: &[f64], v: &[f64]) -> f64 {
        self.theta1(x) * self.theta2(v)
    }

    /// Half-width of the spatial window outside which the one-axis kernel is
    /// negligible (von Mises) or zero (bump); `None` when the window covers the torus.
    pub fn x_halfwidth(&self) -> Option<f64> {
        let w = match self.x_kind {
            XKernelKind::VonMises => {
                let c = 1.0 - VM_TAIL_LOG / self.kappa;
                if c <= -1.0 {
                    return None;
                }
                c.acos() / (2.0 * PI)
            }
            XKernelKind::Bump => 0.5 / self.scale,
        };
        (w < 0.5).then_some(w)
    }

    /// Spread of the one-axis kernel used for resolution checks: the circular
    /// standard deviation for von Mises, the support half-width for the bump.
    pub fn x_width(&self) -> f64 {
        match self.x_kind {
            XKernelKind::VonMises => {
                let r1 = self.theta1_coeff(1).max(1e-300);
                ((-2.0 * r1.ln()).sqrt() / (2.0 * PI)).min(0.5)
            }
            XKernelKind::Bump => 0.5 / self.scale,
        }
    }

    /// Samples of `delta^N_X(x) = theta^{1,N}(x - X)` on the grid.
    pub fn mollified_delta(&self, center: &[f64], grid: &TorusGrid) -> Vec<f64> {
        let d = grid.dim();
        let axes: Vec<Vec<f64>> = (0..d)
            .map(|a| {
                let n = grid.res()[a];
                (0..n).map(|j| self.theta1_axis(j as f64 / n as f64 - center[a])).collect()
            })
            .collect();
        (0..grid.len())
            .map(|f| {
                let idx = grid.unravel(f);
                (0..d).map(|a| axes[a][idx[a]]).product()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fam(n: u64) -> MollifierFamily {
        MollifierFamily::new(0.1, 0.05, n, 2).unwrap()
    }

    #[test]
    fn assumption_checks() {
        assert!(MollifierFamily::new(0.1, 0.05, 100, 2).is_ok());
        let e = MollifierFamily::new(0.2, 0.1, 100, 2).unwrap_err();
        assert!(e.to_string().contains("(d+1)*alpha"));
        let e = MollifierFamily::new(0.05, 0.1, 100, 2).unwrap_err();
        assert!(e.to_string().contains("alpha > beta"));
        assert!(MollifierFamily::relaxed(0.5, 0.5, 64, 2).is_ok());
        assert!(MollifierFamily::relaxed(0.0, 0.5, 64, 2).is_err());
        assert!((fam(256).v_radius() - 0.574_349_177_498_517_4).abs() < 1e-12);
    }

    #[test]
    fn theta1_has_unit_mass() {
        for n in [4u64, 256, 1 << 20] {
            let f = fam(n);
            let m = 512;
            let s: f64 = (0..m).map(|j| f.theta1_axis((j as f64 + 0.5) / m as f64)).sum::<f64>() / m as f64;
            assert!((s - 1.0).abs() < 1e-10);
        }
        let b = MollifierFamily::relaxed(0.5, 0.5, 256, 1).unwrap().with_x_kernel(XKernelKind::Bump);
        let m = 1 << 14;
        let s: f64 = (0..m).map(|j| b.theta1_axis((j as f64 + 0.5) / m as f64)).sum::<f64>() / m as f64;
        assert!((s - 1.0).abs() < 1e-10);
    }

    #[test]
    fn theta2_unit_mass_zero_mean_and_support() {
        for d in 1..=3usize {
            let f = MollifierFamily::relaxed(0.3, 0.1, 64, d).unwrap();
            let r = f.v_radius();
            let m: usize = match d {
                1 => 20_000,
                2 => 800,
                _ => 120,
            };
            let h = 2.0 * r / m as f64;
            let mut mass = 0.0;
            let mut first = vec![0.0; d];
            let total = m.pow(d as u32);
            for flat in 0..total {
                let mut rest = flat;
                let v: Vec<f64> = (0..d)
                    .map(|_| {
                        let i = rest % m;
                        rest /= m;
                        -r + (i as f64 + 0.5) * h
                    })
                    .collect();
                let w = f.theta2(&v) * h.powi(d as i32);
                mass += w;
                for a in 0..d {
                    first[a] += w * v[a];
                }
            }
            let tol = [1e-10, 1e-6, 1e-4][d - 1];
            assert!((mass - 1.0).abs() < tol, "d={d} mass {mass}");
            assert!(first.iter().all(|c| c.abs() < 1e-12));
            assert_eq!(f.theta2(&vec![r * 1.0001 / (d as f64).sqrt(); d]), 0.0);
        }
    }

    #[test]
    fn gradient_ratio_bounded_by_two_pi() {
        for n in [64u64, 1 << 10, 1 << 16] {
            let f = fam(n);
            let m = 256;
            for j in 0..m {
                let x = j as f64 / m as f64;
                let ratio = f.theta1_axis_prime(x).abs() / (f.x_scale() * f.theta1_axis(x));
                assert!(ratio <= 2.0 * PI + 0.01);
            }
        }
    }

    #[test]
    fn theta1_prime_matches_finite_differences() {
        for kind in [XKernelKind::VonMises, XKernelKind::Bump] {
            let f = MollifierFamily::relaxed(0.5, 0.5, 64, 1).unwrap().with_x_kernel(kind);
            let h = 1e-6;
            for j in 0..100 {
                let x = -0.5 + j as f64 / 100.0 + 0.003;
                let fd = (f.theta1_axis(x + h) - f.theta1_axis(x - h)) / (2.0 * h);
                assert!((fd - f.theta1_axis_prime(x)).abs() < 1e-5 * (1.0 + fd.abs()));
            }
        }
    }

    #[test]
    fn fourier_coefficients_match_quadrature() {
        for kind in [XKernelKind::VonMises, XKernelKind::Bump] {
            let f = MollifierFamily::relaxed(0.5, 0.5, 100, 1).unwrap().with_x_kernel(kind);
            let m = 1 << 14;
            for k in 0..6i64 {
                let s: f64 = (0..m)
                    .map(|j| {
                        let x = j as f64 / m as f64;
                        f.theta1_axis(x) * (2.0 * PI * k as f64 * x).cos()
                    })
                    .sum::<f64>()
                    / m as f64;
                assert!((s - f.theta1_coeff(k)).abs() < 1e-10, "{kind:?} k={k}");
            }
        }
    }

    #[test]
    fn mollified_delta_properties() {
        let g = TorusGrid::cubic(2, 32).unwrap();
        let f = fam(1000);
        let c = [0.25, 0.5];
        let d = f.mollified_delta(&c, &g);
        let mass: f64 = d.iter().sum::<f64>() * g.cell_volume();
        assert!((mass - 1.0).abs() < 1e-10);
        let peak = d[g.ravel(&[8, 16])];
        assert!((peak - f.theta1(&[0.0, 0.0])).abs() < 1e-12);
        let shifted = f.mollified_delta(&[c[0] + 3.0 / 32.0, c[1] - 5.0 / 32.0], &g);
        for i in 0..32 {
            for j in 0..32 {
                let a = d[g.ravel(&[i, j])];
                let b = shifted[g.ravel(&[(i + 3) % 32, (j + 32 - 5) % 32])];
                assert!((a - b).abs() <= 1e-12 * peak);
            }
        }
    }

    #[test]
    fn truncation_window() {
        assert!(fam(1000).x_halfwidth().is_none());
        let f = MollifierFamily::relaxed(0.5, 0.5, 1 << 12, 2).unwrap();
        let w = f.x_halfwidth().unwrap();
        let ratio = f.theta1_axis(w) / f.theta1_axis(0.0);
        assert!((ratio.ln() + VM_TAIL_LOG).abs() < 1e-9);
    }
}
