//! Leray projection, Bessel norms and the heat semigroup on a 2D torus.
use std::f64::consts::PI;

use kinfluid::spectral::{SpectralField, TorusGrid};

fn main() {
    let g = TorusGrid::cubic(2, 32).unwrap();
    // gradient part plus a shear: the projection keeps only the shear
    let u = SpectralField::from_fn(&g, 2, |x, c| {
        let grad = 2.0 * PI * (2.0 * PI * x[c]).cos();
        let shear = if c == 0 { (2.0 * PI * x[1]).sin() } else { 0.0 };
        grad + shear
    });
    let pu = u.leray_project().unwrap();
    println!("divergence residual before {:.3e}, after {:.3e}", u.divergence_residual(), pu.divergence_residual());
    println!("L2 before {:.6}, after {:.6} (shear alone: {:.6})", u.l2_norm(), pu.l2_norm(), 0.5f64.sqrt());

    for gamma in [0.0, 0.5, 0.75] {
        println!("||Pu||_({gamma}, 4) = {:.6}", pu.bessel_norm(gamma, 4.0));
    }
    for t in [1e-3, 1e-2, 1e-1] {
        let h = pu.heat_propagate(t).unwrap();
        println!("t = {t:<6} L2 = {:.6}  exact {:.6}", h.l2_norm(), 0.5f64.sqrt() * (-4.0 * PI * PI * t).exp());
    }
}
