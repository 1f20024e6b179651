//! Sampling particles from the initial law and depositing the mollified
//! empirical measure on a phase-space grid.
use kinfluid::mollifier::MollifierFamily;
use kinfluid::particles::{empirical_density, empirical_moments, InitialLaw};
use kinfluid::spectral::TorusGrid;
use kinfluid::vfp::PhaseGrid;

fn main() {
    let x = TorusGrid::cubic(2, 32).unwrap();
    let grid = PhaseGrid::new(x.clone(), &[32, 32], 3.0).unwrap();
    let law = InitialLaw::maxwellian(0.3);
    let exact = law.on_grid(&grid).unwrap();
    let k = 3.0;
    for n in [250, 1000, 4000] {
        let fam = MollifierFamily::new(0.1, 0.05, n as u64, 2).unwrap();
        let ens = law.sample(2, n, 7, 0.5).unwrap();
        let f = empirical_density(&ens, &fam, &grid).unwrap();
        let (m0, m1) = empirical_moments(&ens, &fam, &x);
        let mean_m0 = m0.iter().sum::<f64>() / m0.len() as f64;
        let mean_m1 = m1[0].iter().sum::<f64>() / m1[0].len() as f64;
        println!(
            "N = {n:5}  mass {:.6}  ||<v>^3 (F^N - F)|| = {:.4}  <m0> = {mean_m0:.4}  <m1_x> = {mean_m1:+.4}",
            f.mass(),
            f.weighted_l2_distance(&exact, k).unwrap()
        );
    }
}
