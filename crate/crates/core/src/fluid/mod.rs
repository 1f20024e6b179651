//! Incompressible Navier-Stokes on the torus with unit viscosity, advanced by
//! exponential Euler in Fourier space, and its coupling to particles or to a
//! kinetic density through the drag force.

mod coupling;
mod diagnostics;

pub use coupling::{coupled_step, limit_fluid_forcing, LimitMode};
pub use diagnostics::FluidDiagnostics;

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::mollifier::CutoffSpec;
use crate::particles::ParticleError;
use crate::spectral::{SpectralError, SpectralField, TorusGrid};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluidError {
    #[error("CFL guard violated: dt={dt} exceeds {suggested:.3e} (max speed {speed:.3e})")]
    Cfl { dt: f64, suggested: f64, speed: f64 },
    #[error("non-finite fluid coefficients")]
    NonFinite,
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Particles(#[from] ParticleError),
    #[error("incompatible grids: {0}")]
    Grid(String),
}

/// Exponential-Euler Navier-Stokes stepper.
///
/// One step solves `du/dt = Delta u - P[(u.grad) cutoff(u) + f]` with the
/// nonlinearity and forcing frozen over the step:
/// `u+ = e^{-lambda dt} u - dt phi_1(lambda dt) P(N + f)`, `lambda = 4 pi^2 |k|^2`.
#[derive(Debug, Clone)]
pub struct NsSolver {
    grid: TorusGrid,
    cutoff: CutoffSpec,
    mask: Vec<bool>,
    lambda: Vec<f64>,
}

impl NsSolver {
    pub fn new(grid: &TorusGrid, cutoff: CutoffSpec) -> Self {
        let lambda = grid.k_squared().iter().map(|k2| 4.0 * PI * PI * k2).collect();
        Self {
            grid: grid.clone(),
            cutoff,
            mask: grid.dealias_mask(),
            lambda,
        }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn cutoff(&self) -> &CutoffSpec {
        &self.cutoff
    }

    /// Largest stable step under the guard `dt * max|u| * k_max <= 0.5`.
    pub fn max_dt(&self, u: &SpectralField) -> (f64, f64) {
        let samples = u.to_samples();
        let speed = (0..self.grid.len())
            .map(|i| samples.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let kmax = self.grid.max_wavenumber() as f64;
        (if speed > 0.0 { 0.5 / (speed * kmax) } else { f64::INFINITY }, speed)
    }

    /// Dealiased `(u.grad) cutoff(u)` in Fourier space.
    pub fn nonlinear_term(&self, u: &SpectralField) -> Result<SpectralField, FluidError> {
        let d = self.grid.dim();
        let ud = u.dealias(&self.mask);
        let us = ud.to_samples();
        let chi = if self.cutoff.a.is_infinite() {
            ud
        } else {
            let mut cs = us.clone();
            for i in 0..self.grid.len() {
                let mut y = [0.0; 3];
                for a in 0..d {
                    y[a] = cs[a][i];
                }
                self.cutoff.apply(&mut y[..d]);
                for a in 0..d {
                    cs[a][i] = y[a];
                }
            }
            SpectralField::from_components(&self.grid, &cs)?.dealias(&self.mask)
        };
        let mut out = vec![vec![0.0; self.grid.len()]; d];
        for b in 0..d {
            let db = chi.derivative(b).to_samples();
            for a in 0..d {
                for ((o, &ub), &g) in out[a].iter_mut().zip(&us[b]).zip(&db[a]) {
                    *o += ub * g;
                }
            }
        }
        Ok(SpectralField::from_components(&self.grid, &out)?.dealias(&self.mask))
    }

    /// One step with an optional gridded forcing field `f` (one `Vec` per component).
    pub fn step(&self, u: &SpectralField, forcing: Option<&[Vec<f64>]>, dt: f64) -> Result<SpectralField, FluidError> {
        if u.grid() != &self.grid || u.components() != self.grid.dim() {
            return Err(FluidError::Grid("velocity field does not match the solver grid".into()));
        }
        let (limit, speed) = self.max_dt(u);
        if dt > limit {
            return Err(FluidError::Cfl {
                dt,
                suggested: limit,
                speed,
            });
        }
        let mut rhs = self.nonlinear_term(u)?;
        if let Some(f) = forcing {
            let fh = SpectralField::from_components(&self.grid, f)?;
            rhs = rhs.add(&fh)?;
        }
        let rhs = rhs.leray_project()?;
        let mut out = u.clone();
        for c in 0..self.grid.dim() {
            let uc = out.coeffs_mut(c);
            let rc = rhs.coeffs(c);
            for (i, z) in uc.iter_mut().enumerate() {
                let x = self.lambda[i] * dt;
                let phi = if x < 1e-8 { 1.0 - 0.5 * x } else { -(-x).exp_m1() / x };
                *z = *z * (-x).exp() - rc[i] * (dt * phi);
            }
        }
        let out = out.leray_project()?;
        if out.coeffs(0).iter().any(|z: &Complex64| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(FluidError::NonFinite);
        }
        Ok(out)
    }
}

/// `1/2 ||u||_{L^2}^2`.
pub fn fluid_energy(u: &SpectralField) -> f64 {
    0.5 * u.l2_norm().powi(2)
}

/// `||grad u||_{L^2}^2`.
pub fn dissipation(u: &SpectralField) -> f64 {
    let k2 = u.grid().k_squared();
    (0..u.components())
        .map(|c| {
            u.coeffs(c)
                .iter()
                .zip(&k2)
                .map(|(z, &k)| 4.0 * PI * PI * k * z.norm_sqr())
                .sum::<f64>()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shear(g: &TorusGrid, amp: f64) -> SpectralField {
        SpectralField::from_fn(g, 2, |x, c| if c == 0 { amp * (2.0 * PI * x[1]).sin() } else { 0.0 })
            .leray_project()
            .unwrap()
    }

    #[test]
    fn zero_stays_zero() {
        let g = TorusGrid::cubic(2, 16).unwrap();
        let s = NsSolver::new(&g, CutoffSpec::new(2.0));
        let u = SpectralField::zeros(&g, 2);
        let u1 = s.step(&u, None, 0.01).unwrap();
        assert!(u1.l2_norm() == 0.0);
    }

    #[test]
    fn shear_flow_decays_exactly() {
        let g = TorusGrid::cubic(2, 32).unwrap();
        let s = NsSolver::new(&g, CutoffSpec::new(1.0));
        let u0 = shear(&g, 1.0);
        let mut u = u0.clone();
        for _ in 0..100 {
            u = s.step(&u, None, 1e-3).unwrap();
        }
        let want = u0.scale((-4.0 * PI * PI * 0.1f64).exp());
        assert!(u.sub(&want).unwrap().l2_norm() <= 1e-6);
    }

    #[test]
    fn constant_forcing_moves_mean_mode() {
        let g = TorusGrid::cubic(2, 16).unwrap();
        let s = NsSolver::new(&g, CutoffSpec::new(2.0));
        let u = shear(&g, 0.3);
        let f = vec![vec![0.7; g.len()], vec![-0.2; g.len()]];
        let dt = 0.01;
        let u1 = s.step(&u, Some(&f), dt).unwrap();
        for (c, fc) in [0.7, -0.2].iter().enumerate() {
            let want = u.coeff(c, &[0, 0]) - Complex64::new(dt * fc, 0.0);
            assert!((u1.coeff(c, &[0, 0]) - want).norm() <= 1e-12);
        }
    }

    #[test]
    fn steps_preserve_divergence_free() {
        let g = TorusGrid::cubic(2, 32).unwrap();
        let s = NsSolver::new(&g, CutoffSpec::new(0.5));
        let mut u = SpectralField::from_fn(&g, 2, |x, c| {
            let p = 2.0 * PI;
            if c == 0 {
                (p * x[1]).sin() + 0.3 * (p * (x[0] + 2.0 * x[1])).cos()
            } else {
                0.5 * (p * x[0]).cos()
            }
        })
        .leray_project()
        .unwrap();
        let f: Vec<Vec<f64>> = (0..2)
            .map(|c| (0..g.len()).map(|i| (g.point(i)[c] * 7.0).sin()).collect())
            .collect();
        for _ in 0..10 {
            u = s.step(&u, Some(&f), 0.005).unwrap();
            assert!(u.divergence_residual() <= 1e-12 * u.l2_norm());
            assert!(u.max_imag() < 1e-12);
        }
    }

    #[test]
    fn energy_decays_without_forcing() {
        let g = TorusGrid::cubic(2, 32).unwrap();
        let s = NsSolver::new(&g, CutoffSpec::inactive());
        let mut u = SpectralField::from_fn(&g, 2, |x, c| {
            let p = 2.0 * PI;
            if c == 0 {
                (p * x[1]).sin() * (p * x[0]).cos()
            } else {
                -(p * x[0]).sin() * (p * x[1]).cos() + 0.4 * (2.0 * p * x[0]).sin()
            }
        })
        .leray_project()
        .unwrap();
        let mut e = fluid_energy(&u);
        for _ in 0..50 {
            u = s.step(&u, None, 0.002).unwrap();
            let e1 = fluid_energy(&u);
            assert!(e1 <= e);
            e = e1;
        }
    }

    #[test]
    fn cfl_guard_suggests_dt() {
        let g = TorusGrid::cubic(2, 64).unwrap();
        let s = NsSolver::new(&g, CutoffSpec::new(20.0));
        let u = shear(&g, 10.0);
        match s.step(&u, None, 0.01) {
            Err(FluidError::Cfl { suggested, .. }) => {
                assert!(suggested < 0.01);
                assert!(s.step(&u, None, suggested * 0.99).is_ok());
            }
            other => panic!("expected CFL rejection, got {other:?}"),
        }
    }

    #[test]
    fn first_order_in_time_with_forcing() {
        let g = TorusGrid::cubic(2, 16).unwrap();
        let s = NsSolver::new(&g, CutoffSpec::new(2.0));
        let u0 = SpectralField::from_fn(&g, 2, |x, c| {
            let p = 2.0 * PI;
            if c == 0 {
                0.8 * (p * x[1]).sin() + 0.5 * (p * (x[0] + x[1])).cos()
            } else {
                0.6 * (p * x[0]).sin() + 0.4 * (p * (2.0 * x[0] - x[1])).sin()
            }
        })
        .leray_project()
        .unwrap();
        let f: Vec<Vec<f64>> = (0..2)
            .map(|c| (0..g.len()).map(|i| (2.0 * PI * g.point(i)[1 - c]).cos()).collect())
            .collect();
        let run = |n: usize| {
            let mut u = u0.clone();
            for _ in 0..n {
                u = s.step(&u, Some(&f), 0.2 / n as f64).unwrap();
            }
            u
        };
        let reference = run(320);
        let e1 = run(20).sub(&reference).unwrap().l2_norm();
        let e2 = run(40).sub(&reference).unwrap().l2_norm();
        assert!((e1 / e2).log2() >= 0.9, "ratio {}", e1 / e2);
    }
}
