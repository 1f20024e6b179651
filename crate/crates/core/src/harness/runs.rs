use std::fmt::Write as _;

use super::config::ExperimentConfig;
use super::HarnessError;
use crate::fluid::{coupled_step, fluid_energy, FluidDiagnostics, LimitMode, NsSolver};
use crate::mollifier::CutoffSpec;
use crate::particles::{sample_from_density, ParticleEnsemble};
use crate::spectral::SpectralField;
use crate::vfp::{limit_coupled_step, PhaseSpaceDensity, VfpSolver};

/// Which kinetic system `run_limit` integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitRunMode {
    /// The limit system with noise `sigma` and no cut-off.
    Plain,
    /// The intermediate system with noise `sigma_N` and cut-off drag.
    Auxiliary(usize),
}

impl LimitRunMode {
    pub fn label(&self) -> String {
        match self {
            Self::Plain => "limit".into(),
            Self::Auxiliary(n) => format!("aux_N{n}"),
        }
    }
}

/// Output of a grid run. Densities are handed to the snapshot callback and not retained.
#[derive(Debug, Clone)]
pub struct LimitRun {
    pub mode: LimitRunMode,
    pub sigma: f64,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub u: Vec<SpectralField>,
    /// `u` after every step, starting with the initial field; empty unless requested.
    pub u_every_step: Vec<SpectralField>,
    pub diagnostics_csv: String,
    pub warnings: Vec<String>,
    pub initial_mass: f64,
    pub final_mass: f64,
}

pub const LIMIT_CSV_HEADER: &str =
    "step,t,u_l2,u_bessel,energy,div_residual,mass,boundary_fraction,min_value,clipped_mass,weighted_norm";

pub const COUPLED_CSV_HEADER: &str = "step,t,u_l2,u_bessel,energy,div_residual,kinetic_energy,total_energy";

fn fluid_cols(cfg: &ExperimentConfig, u: &SpectralField, t: f64) -> String {
    let d = FluidDiagnostics::compute(u, t, cfg.gamma, cfg.p);
    d.csv_row()
}

/// Integrates the grid system and calls `on_snapshot(index, step, t, u, F)` at every stored step.
pub fn run_limit(
    cfg: &ExperimentConfig,
    mode: LimitRunMode,
    keep_every_step: bool,
    mut on_snapshot: impl FnMut(usize, usize, f64, &SpectralField, &PhaseSpaceDensity) -> Result<(), HarnessError>,
) -> Result<LimitRun, HarnessError> {
    let (cutoff, sigma, lmode) = match mode {
        LimitRunMode::Plain => (CutoffSpec::inactive(), cfg.sigma, LimitMode::Plain),
        LimitRunMode::Auxiliary(n) => (cfg.cutoff_spec(), cfg.sigma_n(n)?, LimitMode::Cutoff),
    };
    let grid = cfg.fluid_grid()?;
    let ns = NsSolver::new(&grid, cutoff);
    let kin = VfpSolver::new(&cfg.phase_grid()?);
    let mut u = cfg.initial_field()?;
    let mut f = cfg.initial_density()?;
    let snaps = cfg.snapshot_steps();
    let label = mode.label();
    let mut out = LimitRun {
        mode,
        sigma,
        steps: Vec::new(),
        times: Vec::new(),
        u: Vec::new(),
        u_every_step: Vec::new(),
        diagnostics_csv: format!("{LIMIT_CSV_HEADER}\n"),
        warnings: Vec::new(),
        initial_mass: f.mass(),
        final_mass: 0.0,
    };
    let k = f64::from(cfg.k);
    let mut report = crate::vfp::StepReport::of(&f);
    for step in 0..=cfg.steps() {
        let t = step as f64 * cfg.dt;
        f.t = t;
        writeln!(
            out.diagnostics_csv,
            "{step},{},{:.12e},{:.6e},{:.6e},{:.3e},{:.12e}",
            fluid_cols(cfg, &u, t),
            report.mass,
            report.boundary_fraction,
            report.min_value,
            report.clipped,
            f.weighted_l2_norm(k)
        )
        .unwrap();
        if keep_every_step {
            out.u_every_step.push(u.clone());
        }
        if let Ok(idx) = snaps.binary_search(&step) {
            on_snapshot(idx, step, t, &u, &f)?;
            out.steps.push(step);
            out.times.push(t);
            out.u.push(u.clone());
        }
        if step == cfg.steps() {
            break;
        }
        let (u1, f1, rep) = limit_coupled_step(&ns, &kin, &u, &f, sigma, cfg.dt, lmode).map_err(|e| HarnessError::Solver {
            run: label.clone(),
            step,
            message: e.to_string(),
        })?;
        if rep.boundary_flagged() {
            out.warnings.push(format!(
                "{label}: step {step}: boundary mass fraction {:.3e} exceeds the limit; V_max may be too small",
                rep.boundary_fraction
            ));
        }
        u = u1;
        f = f1;
        report = rep;
    }
    out.final_mass = f.mass();
    Ok(out)
}

/// Output of one particle run.
#[derive(Debug, Clone)]
pub struct CoupledRun {
    pub n: usize,
    pub seed: u64,
    pub sigma_n: f64,
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    pub u: Vec<SpectralField>,
    pub particles: Vec<ParticleEnsemble>,
    /// Noise-coupled copies moving in the limit field, when one was supplied.
    pub limit_particles: Vec<ParticleEnsemble>,
    pub diagnostics_csv: String,
}

/// Initial particles: i.i.d. draws from the initial law, `sigma` stored on the ensemble.
pub fn initial_particles(cfg: &ExperimentConfig, n: usize, seed: u64, sigma: f64) -> Result<ParticleEnsemble, HarnessError> {
    let r = match cfg.initial_law() {
        Some(law) => law.sample(cfg.d, n, seed, sigma),
        None => sample_from_density(&cfg.initial_density()?, n, seed, sigma),
    };
    r.map_err(|e| HarnessError::Config(e.to_string()))
}

/// Integrates the particle system with `N` particles.
///
/// With `limit_u` (the limit velocity after every step) a second ensemble with the
/// same initial draw and the same Brownian increments, noise level `sigma`, is moved
/// in the limit field alongside.
pub fn run_coupled(
    cfg: &ExperimentConfig,
    n: usize,
    seed: u64,
    limit_u: Option<&[SpectralField]>,
) -> Result<CoupledRun, HarnessError> {
    let sigma_n = cfg.sigma_n(n)?;
    let fam = cfg.family(n)?;
    let grid = cfg.fluid_grid()?;
    let ns = NsSolver::new(&grid, cfg.cutoff_spec());
    let mut u = cfg.initial_field()?;
    let mut ens = initial_particles(cfg, n, seed, sigma_n)?;
    let mut bar = match limit_u {
        Some(lu) => {
            if lu.len() != cfg.steps() + 1 {
                return Err(HarnessError::Config("limit field history does not match the time grid".into()));
            }
            Some(initial_particles(cfg, n, seed, cfg.sigma)?)
        }
        None => None,
    };
    let snaps = cfg.snapshot_steps();
    let label = format!("N{n}_s{seed}");
    let mut out = CoupledRun {
        n,
        seed,
        sigma_n,
        steps: Vec::new(),
        times: Vec::new(),
        u: Vec::new(),
        particles: Vec::new(),
        limit_particles: Vec::new(),
        diagnostics_csv: format!("{COUPLED_CSV_HEADER}\n"),
    };
    let plain = CutoffSpec::inactive();
    for step in 0..=cfg.steps() {
        let t = step as f64 * cfg.dt;
        let ke = ens.kinetic_energy();
        writeln!(
            out.diagnostics_csv,
            "{step},{},{:.12e},{:.12e}",
            fluid_cols(cfg, &u, t),
            ke,
            fluid_energy(&u) + ke
        )
        .unwrap();
        if snaps.binary_search(&step).is_ok() {
            out.steps.push(step);
            out.times.push(t);
            out.u.push(u.clone());
            out.particles.push(ens.clone());
            if let Some(b) = &bar {
                out.limit_particles.push(b.clone());
            }
        }
        if step == cfg.steps() {
            break;
        }
        let fail = |message: String| HarnessError::Solver {
            run: label.clone(),
            step,
            message,
        };
        if let (Some(b), Some(lu)) = (bar.as_mut(), limit_u) {
            b.step_in_field(&lu[step], cfg.dt, &plain, cfg.interp).map_err(|e| fail(e.to_string()))?;
        }
        u = coupled_step(&ns, &u, &mut ens, &fam, cfg.dt, cfg.interp).map_err(|e| fail(e.to_string()))?;
    }
    Ok(out)
}
