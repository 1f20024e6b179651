//! The phase-space mollifier family across N: spatial Fourier coefficients,
//! widths and the velocity kernel.
use kinfluid::mollifier::{CutoffSpec, MollifierFamily};

fn main() {
    println!("{:>6} {:>8} {:>10} {:>10} {:>10} {:>10}", "N", "kappa", "x_width", "v_radius", "rho_1", "rho_4");
    for n in [64u64, 256, 1024, 4096, 16384] {
        let f = MollifierFamily::new(0.1, 0.05, n, 2).unwrap();
        println!(
            "{n:>6} {:>8.4} {:>10.4} {:>10.4} {:>10.6} {:>10.6}",
            f.kappa(),
            f.x_width(),
            f.v_radius(),
            f.theta1_coeff(1),
            f.theta1_coeff(4)
        );
    }

    let f = MollifierFamily::new(0.1, 0.05, 1000, 2).unwrap();
    let r = f.v_radius();
    let h = r / 200.0;
    let mut mass = 0.0;
    for i in -200..200 {
        for j in -200..200 {
            mass += f.theta2(&[(i as f64 + 0.5) * h, (j as f64 + 0.5) * h]) * h * h;
        }
    }
    println!("velocity kernel mass by midpoint rule: {mass:.8}");

    let c = CutoffSpec::new(4.0);
    for y in [0.0, 2.0, 3.9, 4.0, 5.0, 50.0] {
        println!("cutoff({y}) = {:.4}", c.scalar(y));
    }
}
