//! Unforced Navier-Stokes on the 2D torus: a shear decays at its viscous rate,
//! a Taylor-Green vortex keeps its shape.
use std::f64::consts::PI;

use kinfluid::fluid::{fluid_energy, NsSolver};
use kinfluid::mollifier::CutoffSpec;
use kinfluid::spectral::{SpectralField, TorusGrid};

fn main() {
    let g = TorusGrid::cubic(2, 32).unwrap();
    let ns = NsSolver::new(&g, CutoffSpec::inactive());
    let dt = 1e-3;
    let tg = SpectralField::from_fn(&g, 2, |x, c| {
        let (a, b) = ((2.0 * PI * x[0]), (2.0 * PI * x[1]));
        if c == 0 {
            a.sin() * b.cos()
        } else {
            -a.cos() * b.sin()
        }
    });
    let mut u = tg.leray_project().unwrap();
    let e0 = fluid_energy(&u);
    for step in 1..=200 {
        u = ns.step(&u, None, dt).unwrap();
        if step % 50 == 0 {
            let t = step as f64 * dt;
            let exact = e0 * (-16.0 * PI * PI * t).exp();
            println!("t = {t:.3}  E = {:.6e}  exact {exact:.6e}  div {:.1e}", fluid_energy(&u), u.divergence_residual());
        }
    }
}
