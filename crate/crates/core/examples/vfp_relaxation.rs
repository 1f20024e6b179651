//! Kinetic solver in a frozen fluid: an off-centre Maxwellian relaxes to the
//! Fokker-Planck equilibrium around the fluid velocity, with exact mass.
use kinfluid::spectral::TorusGrid;
use kinfluid::vfp::{PhaseGrid, PhaseSpaceDensity, VfpSolver};

fn main() {
    let grid = PhaseGrid::new(TorusGrid::cubic(2, 8).unwrap(), &[48, 48], 4.0).unwrap();
    let sigma = 0.6;
    let u0 = [0.4, -0.2];
    let mut f = PhaseSpaceDensity::from_fn(&grid, |_, v| (-((v[0] + 1.0).powi(2) + (v[1] - 1.0).powi(2)) / 0.18).exp());
    f.normalize().unwrap();
    let eq = {
        let mut e = PhaseSpaceDensity::from_fn(&grid, |_, v| {
            (-((v[0] - u0[0]).powi(2) + (v[1] - u0[1]).powi(2)) / (sigma * sigma)).exp()
        });
        e.normalize().unwrap();
        e
    };
    let u: Vec<Vec<f64>> = u0.iter().map(|&c| vec![c; grid.nx()]).collect();
    let solver = VfpSolver::new(&grid);
    let m0 = f.mass();
    for step in 1..=300 {
        let r = solver.step(&mut f, &u, sigma, 0.01);
        if step % 50 == 0 {
            let m = f.moments(1);
            let n = grid.nx() as f64;
            let mean_v: Vec<f64> = m.m1.iter().map(|c| c.iter().sum::<f64>() / n).collect();
            println!(
                "t = {:.2}  L1 to equilibrium {:.3e}  mean v ({:+.4}, {:+.4})  mass drift {:.1e}  clipped {:.1e}",
                f.t,
                f.l1_distance(&eq).unwrap(),
                mean_v[0],
                mean_v[1],
                f.mass() - m0,
                r.clipped
            );
        }
    }
}
