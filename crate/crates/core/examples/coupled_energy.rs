//! Particle system coupled to the fluid through the drag force. Without noise
//! the total energy of fluid and particles can only decrease.
use kinfluid::fluid::{coupled_step, fluid_energy, NsSolver};
use kinfluid::mollifier::{CutoffSpec, MollifierFamily};
use kinfluid::particles::InitialLaw;
use kinfluid::spectral::{InterpScheme, SpectralField, TorusGrid};

fn main() {
    let g = TorusGrid::cubic(2, 64).unwrap();
    let n = 1000;
    let u0 = SpectralField::from_fn(&g, 2, |x, c| {
        if c == 0 {
            0.5 * (2.0 * std::f64::consts::PI * x[1]).sin()
        } else {
            0.0
        }
    });
    let mut u = u0.leray_project().unwrap();
    let ns = NsSolver::new(&g, CutoffSpec::new(4.0));
    let fam = MollifierFamily::new(0.1, 0.05, n as u64, 2).unwrap();
    let mut ens = InitialLaw::maxwellian(0.3).sample(2, n, 11, 0.0).unwrap();
    let energy = |u: &SpectralField, e: &kinfluid::particles::ParticleEnsemble| fluid_energy(u) + e.kinetic_energy();
    let mut prev = energy(&u, &ens);
    println!("E(0) = {prev:.6e}");
    for step in 1..=50 {
        u = coupled_step(&ns, &u, &mut ens, &fam, 0.01, InterpScheme::Spline4).unwrap();
        let e = energy(&u, &ens);
        if step % 10 == 0 {
            println!("t = {:.2}  E = {e:.6e}  change {:+.3e}", step as f64 * 0.01, e - prev);
        }
        prev = e;
    }
}
