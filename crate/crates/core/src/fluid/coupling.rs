use serde::{Deserialize, Serialize};

use super::{FluidError, NsSolver};
use crate::mollifier::{CutoffSpec, MollifierFamily};
use crate::particles::{drag_forcing, ParticleEnsemble};
use crate::spectral::{InterpScheme, SpectralField};
use crate::vfp::PhaseSpaceDensity;

/// Whether the cut-off is applied to `u` inside the kinetic drag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitMode {
    Plain,
    Cutoff,
}

/// Drag forcing of a kinetic density: `U m_0(F) - m_1(F)` with `U = u` or `cutoff(u)`.
pub fn limit_fluid_forcing(
    u: &SpectralField,
    f: &PhaseSpaceDensity,
    cutoff: &CutoffSpec,
    mode: LimitMode,
) -> Result<Vec<Vec<f64>>, FluidError> {
    if f.grid().x_grid() != u.grid() {
        return Err(FluidError::Grid(
            "phase-space x grid differs from the fluid grid".into(),
        ));
    }
    let d = u.dim();
    let mut us = u.to_samples();
    if mode == LimitMode::Cutoff {
        let mut y = [0.0; 3];
        for i in 0..u.grid().len() {
            for a in 0..d {
                y[a] = us[a][i];
            }
            cutoff.apply(&mut y[..d]);
            for a in 0..d {
                us[a][i] = y[a];
            }
        }
    }
    let m = f.moments(0);
    Ok((0..d)
        .map(|a| {
            us[a]
                .iter()
                .zip(&m.m0)
                .zip(&m.m1[a])
                .map(|((uu, m0), m1)| uu * m0 - m1)
                .collect()
        })
        .collect())
}

/// One synchronous step of the particle system: drag and particle drift are
/// evaluated at the start of the step, the fluid advances with the frozen drag,
/// then the particles advance against the start-of-step field.
pub fn coupled_step(
    solver: &NsSolver,
    u: &SpectralField,
    ens: &mut ParticleEnsemble,
    fam: &MollifierFamily,
    dt: f64,
    scheme: InterpScheme,
) -> Result<SpectralField, FluidError> {
    let drift = ens.drift(u, scheme, solver.cutoff());
    let force = drag_forcing(ens, &drift, fam, solver.grid());
    let next = solver.step(u, Some(&force), dt)?;
    ens.advance(&drift, dt)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fluid::fluid_energy;
    use crate::particles::InitialLaw;
    use crate::spectral::TorusGrid;
    use crate::vfp::PhaseGrid;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    #[test]
    fn steady_state_is_invariant() {
        let g = TorusGrid::cubic(2, 16).unwrap();
        let s = NsSolver::new(&g, CutoffSpec::new(2.0));
        let fam = MollifierFamily::new(0.1, 0.05, 100, 2).unwrap();
        let u = SpectralField::zeros(&g, 2);
        let mut e = ParticleEnsemble::new(2, vec![0.1, 0.2, 0.6, 0.3], vec![0.0; 4], 1, 0.0).unwrap();
        let before = e.clone();
        let u1 = coupled_step(&s, &u, &mut e, &fam, 0.01, InterpScheme::Spline4).unwrap();
        assert!(u1.l2_norm() <= 1e-12);
        assert_eq!(e.positions(), before.positions());
        assert_eq!(e.velocities(), before.velocities());
    }

    #[test]
    fn single_particle_momentum_exchange() {
        let g = TorusGrid::cubic(2, 16).unwrap();
        let s = NsSolver::new(&g, CutoffSpec::new(2.0));
        let fam = MollifierFamily::new(0.1, 0.05, 100, 2).unwrap();
        let u = SpectralField::zeros(&g, 2);
        let mut e = ParticleEnsemble::new(2, vec![0.4, 0.4], vec![1.0, 0.0], 1, 0.0).unwrap();
        let dt = 0.01;
        let u1 = coupled_step(&s, &u, &mut e, &fam, dt, InterpScheme::Spline4).unwrap();
        assert!((u1.coeff(0, &[0, 0]) - Complex64::new(dt, 0.0)).norm() < 1e-12);
        assert!(u1.coeff(1, &[0, 0]).norm() < 1e-12);
        assert!((1.0 - e.velocity(0)[0] - (1.0 - (-dt).exp())).abs() < 1e-14);
    }

    #[test]
    fn limit_forcing_cases() {
        let g = TorusGrid::cubic(2, 16).unwrap();
        let pg = PhaseGrid::new(g.clone(), &[32, 32], 3.0).unwrap();
        let u = SpectralField::from_fn(&g, 2, |x, c| if c == 0 { 0.5 * (2.0 * PI * x[1]).sin() } else { 0.0 });
        let cut = CutoffSpec::new(4.0);
        let zero = PhaseSpaceDensity::zeros(&pg);
        let f0 = limit_fluid_forcing(&u, &zero, &cut, LimitMode::Plain).unwrap();
        assert!(f0.iter().flatten().all(|&x| x == 0.0));

        let mw = InitialLaw::maxwellian(0.4).on_grid(&pg).unwrap();
        let f1 = limit_fluid_forcing(&u, &mw, &cut, LimitMode::Plain).unwrap();
        let us = u.to_samples();
        for i in 0..g.len() {
            assert!((f1[0][i] - us[0][i]).abs() < 1e-12);
            assert!(f1[1][i].abs() < 1e-12);
        }

        let mut shifted = InitialLaw::maxwellian(0.4);
        shifted.v.mean = vec![0.3, -0.2];
        let sf = shifted.on_grid(&pg).unwrap();
        let f2 = limit_fluid_forcing(&u, &sf, &cut, LimitMode::Cutoff).unwrap();
        for (a, vbar) in [0.3, -0.2].iter().enumerate() {
            let mean: f64 = f2[a].iter().sum::<f64>() / g.len() as f64;
            // u has zero mean, so the spatial mean is -vbar up to velocity quadrature
            assert!((mean + vbar).abs() < 1e-6);
        }

        let other = PhaseGrid::new(TorusGrid::cubic(2, 8).unwrap(), &[8, 8], 3.0).unwrap();
        assert!(limit_fluid_forcing(&u, &PhaseSpaceDensity::zeros(&other), &cut, LimitMode::Plain).is_err());
    }

    #[test]
    fn coupled_energy_is_nonincreasing() {
        let g = TorusGrid::cubic(2, 32).unwrap();
        let s = NsSolver::new(&g, CutoffSpec::new(4.0));
        let fam = MollifierFamily::new(0.1, 0.05, 300, 2).unwrap();
        let mut u = SpectralField::from_fn(&g, 2, |x, c| if c == 0 { 0.5 * (2.0 * PI * x[1]).sin() } else { 0.0 });
        let mut e = InitialLaw::maxwellian(0.3).sample(2, 300, 5, 0.0).unwrap();
        let dt = 0.01;
        let energy = |u: &SpectralField, e: &ParticleEnsemble| fluid_energy(u) + e.kinetic_energy();
        let e0 = energy(&u, &e);
        let mut prev = e0;
        for _ in 0..20 {
            u = coupled_step(&s, &u, &mut e, &fam, dt, InterpScheme::Spline4).unwrap();
            let now = energy(&u, &e);
            assert!(now <= prev + 5.0 * dt * dt * e0, "{now} > {prev}");
            prev = now;
        }
    }
}
