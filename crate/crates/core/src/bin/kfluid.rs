use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kinfluid::harness::{
    chaos_study, convergence_study, replot, validate, write_coupled_runs, write_limit_runs, ExperimentConfig,
    HarnessError, StudyOutcome,
};

const CSV_HELP: &str = "\
Exit codes: 0 success, 2 config rejected, 3 solver or metric failure, 1 I/O error.

CSV files:
  errors.csv          n,seed,sigma_n,bessel_err,weighted_err,energy_err,dissipation_err,chaos_err,rho_n,rho_tilde_n
                      one row per (N, seed) cell; sup over snapshots, dissipation is a trapezoid time integral
  means.csv           n,seeds,bessel_err,weighted_err,energy_err,dissipation_err,chaos_err,rho_n,rho_tilde_n,energy_constant
                      seed means; energy_constant = (energy_err^2 + dissipation_err) / rho_n^2
  rates.csv           metric,slope,intercept,r2,spearman,ci_lo,ci_hi
                      log-log fit of seed means against N, 95% bootstrap interval over seeds
  chaos.csv           n,seed,sigma_n,sigma_gap,bessel_sup,surrogate,chaos_err,ratio
                      surrogate = |sigma - sigma_N| + bessel_sup, ratio = chaos_err / surrogate
  chaos_summary.csv   n,mean_chaos,mean_surrogate,kappa,bound,within_bound,ratio_rel
                      kappa fitted at the smallest N, bound = 3 kappa mean_surrogate
  limit/diagnostics.csv, aux_N*/diagnostics.csv
                      step,t,u_l2,u_bessel,energy,div_residual,mass,boundary_fraction,min_value,clipped_mass,weighted_norm
  cells/*/diagnostics.csv
                      step,t,u_l2,u_bessel,energy,div_residual,kinetic_energy,total_energy
  */index.csv         index,step,t";

#[derive(Parser)]
#[command(name = "kfluid", version, about = "Particle/fluid runs, limit runs and convergence studies", after_help = CSV_HELP)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent (N, seed) cells.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// Added to every seed of the config.
    #[arg(long, default_value_t = 0)]
    seed_offset: u64,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a config against the model assumptions and the grid resolution.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Particle runs for every (N, seed) of the config.
    RunCoupled(Common),
    /// The limit run, plus one auxiliary run per N when enabled.
    RunLimit(Common),
    /// Limit, auxiliary and particle runs, then errors and rate fits.
    ConvergenceStudy(Common),
    /// The same runs, reported as propagation-of-chaos tables.
    ChaosStudy(Common),
    /// Recompute all tables and plots of a study directory from its snapshots.
    Replot {
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(c: &Common) -> Result<(ExperimentConfig, PathBuf), HarnessError> {
    let cfg = ExperimentConfig::load(&c.config)?.with_seed_offset(c.seed_offset);
    let out = c
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| HarnessError::Config("no --out given and no output_dir in the config".into()))?;
    Ok((cfg, out))
}

fn report(out: &StudyOutcome) -> Result<(), HarnessError> {
    for r in &out.summary.rates {
        println!(
            "{:16} slope {:+.4}  spearman {:+.3}  95% [{:+.4}, {:+.4}]",
            r.metric, r.slope, r.spearman, r.ci_lo, r.ci_hi
        );
    }
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    failures(&out.failures, &out.dir)
}

fn failures(f: &[String], dir: &Path) -> Result<(), HarnessError> {
    for x in f {
        eprintln!("failed: {x}");
    }
    if f.is_empty() {
        println!("wrote {}", dir.display());
        Ok(())
    } else {
        Err(HarnessError::Solver {
            run: dir.display().to_string(),
            step: 0,
            message: format!("{} runs failed", f.len()),
        })
    }
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.cmd {
        Cmd::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let r = validate(&cfg);
            print!("{r}");
            if !r.passed() {
                return Err(HarnessError::Validation(r));
            }
            Ok(())
        }
        Cmd::RunCoupled(c) => {
            let (cfg, out) = load(&c)?;
            let f = write_coupled_runs(&cfg, &out, c.workers)?;
            failures(&f, &out)
        }
        Cmd::RunLimit(c) => {
            let (cfg, out) = load(&c)?;
            for w in write_limit_runs(&cfg, &out)? {
                eprintln!("warning: {w}");
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Cmd::ConvergenceStudy(c) => {
            let (cfg, out) = load(&c)?;
            report(&convergence_study(&cfg, &out, c.workers)?)
        }
        Cmd::ChaosStudy(c) => {
            let (cfg, out) = load(&c)?;
            let o = chaos_study(&cfg, &out, c.workers)?;
            for s in &o.summary.chaos_summary {
                println!(
                    "N {:6}  chaos {:.4e}  bound {:.4e}  {}",
                    s.n,
                    s.mean_chaos,
                    s.bound,
                    if s.within_bound { "ok" } else { "exceeds" }
                );
            }
            report(&o)
        }
        Cmd::Replot { out } => report(&replot(&out)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
