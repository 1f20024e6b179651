use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{check_study_schedule, validate, ExperimentConfig};
use super::persist::{ensure_dir, read_index, read_text, snapshot_path, write_index, write_text, Manifest};
use super::plot::{line_chart, Scale, Series};
use super::runs::{run_coupled, run_limit, CoupledRun, LimitRun, LimitRunMode};
use super::HarnessError;
use crate::metrics::{
    bessel_error, bootstrap_slope_ci, chaos_error, energy_error, gradient_error_sq, rate_fit, rho_n, rho_tilde_n,
    spearman, time_integral, weighted_error, ErrorRecord, MetricsError, Stream,
};
use crate::particles::{empirical_density, read_particles, write_particles, ParticleEnsemble};
use crate::spectral::{read_field, write_field, SpectralField};
use crate::vfp::{read_density, write_density, PhaseSpaceDensity};

pub const MEANS_CSV_HEADER: &str =
    "n,seeds,bessel_err,weighted_err,energy_err,dissipation_err,chaos_err,rho_n,rho_tilde_n,energy_constant";
pub const RATES_CSV_HEADER: &str = "metric,slope,intercept,r2,spearman,ci_lo,ci_hi";
pub const CHAOS_CSV_HEADER: &str = "n,seed,sigma_n,sigma_gap,bessel_sup,surrogate,chaos_err,ratio";
pub const CHAOS_SUMMARY_CSV_HEADER: &str = "n,mean_chaos,mean_surrogate,kappa,bound,within_bound,ratio_rel";

const BOOTSTRAP_REPS: usize = 2000;
const BOOTSTRAP_SEED: u64 = 0x6b66_6c75_6964;

type Metric = (&'static str, fn(&ErrorRecord) -> f64);

const METRICS: [Metric; 7] = [
    ("bessel_err", |r| r.bessel),
    ("weighted_err", |r| r.weighted),
    ("energy_err", |r| r.energy),
    ("dissipation_err", |r| r.dissipation),
    ("chaos_err", |r| r.chaos),
    ("rho_n", |r| r.rho),
    ("rho_tilde_n", |r| r.rho_tilde),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Convergence,
    Chaos,
}

impl StudyKind {
    fn label(self) -> &'static str {
        match self {
            Self::Convergence => "convergence-study",
            Self::Chaos => "chaos-study",
        }
    }
}

/// Seed means at one `N`, in `METRICS` order.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanRow {
    pub n: usize,
    pub seeds: usize,
    pub values: [f64; 7],
    /// `(energy^2 + dissipation) / rho_N^2`, the constant of the energy inequality.
    pub energy_constant: f64,
}

impl MeanRow {
    pub fn get(&self, metric: &str) -> Option<f64> {
        METRICS.iter().position(|m| m.0 == metric).map(|i| self.values[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub metric: String,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub spearman: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChaosRow {
    pub n: usize,
    pub seed: u64,
    pub sigma_n: f64,
    pub sigma_gap: f64,
    pub bessel_sup: f64,
    /// `|sigma - sigma_N| + sup_t ||u^N - u||_{gamma,p}`
    pub surrogate: f64,
    pub chaos: f64,
    pub ratio: f64,
}

/// Seed-averaged chaos error against `3 kappa (surrogate)`, `kappa` fitted at the smallest `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChaosSummary {
    pub n: usize,
    pub mean_chaos: f64,
    pub mean_surrogate: f64,
    pub kappa: f64,
    pub bound: f64,
    pub within_bound: bool,
    /// `(mean_chaos / mean_surrogate) / kappa`
    pub ratio_rel: f64,
}

/// Everything derived from the per-cell records.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub means: Vec<MeanRow>,
    pub rates: Vec<RateRow>,
    pub chaos: Vec<ChaosRow>,
    pub chaos_summary: Vec<ChaosSummary>,
}

impl Summary {
    pub fn rate(&self, metric: &str) -> Option<&RateRow> {
        self.rates.iter().find(|r| r.metric == metric)
    }
}

#[derive(Debug, Clone)]
pub struct StudyOutcome {
    pub dir: PathBuf,
    pub records: Vec<ErrorRecord>,
    pub summary: Summary,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
}

fn io_at<T>(path: &Path, r: io::Result<T>) -> Result<T, HarnessError> {
    r.map_err(|e| HarnessError::io(path, e))
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Seed means, rate fits and the chaos tables, from records in cell order.
pub fn summarize(records: &[ErrorRecord], sigma: f64) -> Summary {
    let mut groups: BTreeMap<usize, Vec<&ErrorRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.n).or_default().push(r);
    }
    let means: Vec<MeanRow> = groups
        .iter()
        .map(|(&n, rs)| {
            let values = METRICS.map(|(_, get)| mean(&rs.iter().map(|r| get(r)).collect::<Vec<_>>()));
            let rho = values[5];
            let energy_constant = if rho > 0.0 {
                (values[2] * values[2] + values[3]) / (rho * rho)
            } else {
                f64::NAN
            };
            MeanRow {
                n,
                seeds: rs.len(),
                values,
                energy_constant,
            }
        })
        .collect();
    let ns: Vec<f64> = means.iter().map(|m| m.n as f64).collect();
    let rates = METRICS
        .iter()
        .enumerate()
        .map(|(i, (name, get))| {
            let ys: Vec<f64> = means.iter().map(|m| m.values[i]).collect();
            let pts: Vec<(f64, f64)> = ns.iter().copied().zip(ys.iter().copied()).collect();
            let fit = rate_fit(&pts).ok();
            let per_seed: Vec<(f64, Vec<f64>)> = groups
                .iter()
                .map(|(&n, rs)| (n as f64, rs.iter().map(|r| get(r)).collect()))
                .collect();
            let ci = fit
                .and_then(|_| bootstrap_slope_ci(&per_seed, BOOTSTRAP_REPS, BOOTSTRAP_SEED, 0.95).ok())
                .unwrap_or((f64::NAN, f64::NAN));
            RateRow {
                metric: name.to_string(),
                slope: fit.map_or(f64::NAN, |f| f.slope),
                intercept: fit.map_or(f64::NAN, |f| f.intercept),
                r2: fit.map_or(f64::NAN, |f| f.r2),
                spearman: if ns.len() >= 2 { spearman(&ns, &ys) } else { f64::NAN },
                ci_lo: ci.0,
                ci_hi: ci.1,
            }
        })
        .collect();
    let chaos: Vec<ChaosRow> = records
        .iter()
        .map(|r| {
            let gap = (sigma - r.sigma_n).abs();
            let surrogate = gap + r.bessel;
            ChaosRow {
                n: r.n,
                seed: r.seed,
                sigma_n: r.sigma_n,
                sigma_gap: gap,
                bessel_sup: r.bessel,
                surrogate,
                chaos: r.chaos,
                ratio: if surrogate > 0.0 { r.chaos / surrogate } else { f64::NAN },
            }
        })
        .collect();
    let per_n: Vec<(usize, f64, f64)> = groups
        .keys()
        .map(|&n| {
            let rows: Vec<&ChaosRow> = chaos.iter().filter(|c| c.n == n).collect();
            let mc = mean(&rows.iter().map(|c| c.chaos).collect::<Vec<_>>());
            let ms = mean(&rows.iter().map(|c| c.surrogate).collect::<Vec<_>>());
            (n, mc, ms)
        })
        .collect();
    let kappa = per_n.first().map_or(f64::NAN, |&(_, c, s)| c / s);
    let chaos_summary = per_n
        .iter()
        .map(|&(n, mc, ms)| {
            let bound = 3.0 * kappa * ms;
            ChaosSummary {
                n,
                mean_chaos: mc,
                mean_surrogate: ms,
                kappa,
                bound,
                within_bound: mc <= bound,
                ratio_rel: mc / ms / kappa,
            }
        })
        .collect();
    Summary {
        means,
        rates,
        chaos,
        chaos_summary,
    }
}

fn e(x: f64) -> String {
    format!("{x:.12e}")
}

fn summary_tables(records: &[ErrorRecord], s: &Summary) -> Vec<(&'static str, String)> {
    let mut errors = format!("{}\n", ErrorRecord::CSV_HEADER);
    for r in records {
        writeln!(errors, "{}", r.csv_row()).unwrap();
    }
    let mut means = format!("{MEANS_CSV_HEADER}\n");
    for m in &s.means {
        let vals: Vec<String> = m.values.iter().map(|&v| e(v)).collect();
        writeln!(means, "{},{},{},{}", m.n, m.seeds, vals.join(","), e(m.energy_constant)).unwrap();
    }
    let mut rates = format!("{RATES_CSV_HEADER}\n");
    for r in &s.rates {
        writeln!(
            rates,
            "{},{},{},{},{},{},{}",
            r.metric,
            e(r.slope),
            e(r.intercept),
            e(r.r2),
            e(r.spearman),
            e(r.ci_lo),
            e(r.ci_hi)
        )
        .unwrap();
    }
    let mut chaos = format!("{CHAOS_CSV_HEADER}\n");
    for c in &s.chaos {
        writeln!(
            chaos,
            "{},{},{},{},{},{},{},{}",
            c.n,
            c.seed,
            e(c.sigma_n),
            e(c.sigma_gap),
            e(c.bessel_sup),
            e(c.surrogate),
            e(c.chaos),
            e(c.ratio)
        )
        .unwrap();
    }
    let mut cs = format!("{CHAOS_SUMMARY_CSV_HEADER}\n");
    for c in &s.chaos_summary {
        writeln!(
            cs,
            "{},{},{},{},{},{},{}",
            c.n,
            e(c.mean_chaos),
            e(c.mean_surrogate),
            e(c.kappa),
            e(c.bound),
            c.within_bound,
            e(c.ratio_rel)
        )
        .unwrap();
    }
    vec![
        ("errors.csv", errors),
        ("means.csv", means),
        ("rates.csv", rates),
        ("chaos.csv", chaos),
        ("chaos_summary.csv", cs),
    ]
}

fn csv_columns(text: &str, names: &[&str]) -> Vec<Vec<(f64, f64)>> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').collect();
    let t_col = header.iter().position(|h| *h == "t");
    let cols: Vec<Option<usize>> = names.iter().map(|n| header.iter().position(|h| h == n)).collect();
    let mut out = vec![Vec::new(); names.len()];
    for line in lines {
        let f: Vec<f64> = line.split(',').map(|s| s.parse().unwrap_or(f64::NAN)).collect();
        let Some(t) = t_col.and_then(|c| f.get(c)) else { continue };
        for (o, c) in out.iter_mut().zip(&cols) {
            if let Some(&y) = c.and_then(|c| f.get(c)) {
                o.push((*t, y));
            }
        }
    }
    out
}

fn write_plots(out: &Path, s: &Summary) -> Result<(), HarnessError> {
    let dir = out.join("plots");
    ensure_dir(&dir)?;
    let series: Vec<Series> = METRICS
        .iter()
        .enumerate()
        .map(|(i, (name, _))| Series {
            name: name.to_string(),
            points: s.means.iter().map(|m| (m.n as f64, m.values[i])).collect(),
        })
        .collect();
    write_text(
        &dir.join("errors_vs_n.svg"),
        &line_chart("Seed-mean errors", "N", "error", Scale::Log, Scale::Log, &series),
    )?;
    let chaos = [
        Series {
            name: "mean chaos error".into(),
            points: s.chaos_summary.iter().map(|c| (c.n as f64, c.mean_chaos)).collect(),
        },
        Series {
            name: "3 kappa surrogate".into(),
            points: s.chaos_summary.iter().map(|c| (c.n as f64, c.bound)).collect(),
        },
    ];
    write_text(
        &dir.join("chaos_vs_n.svg"),
        &line_chart("Propagation of chaos", "N", "distance", Scale::Log, Scale::Log, &chaos),
    )?;
    let diag = out.join("limit").join("diagnostics.csv");
    if diag.exists() {
        let names = ["u_l2", "u_bessel", "weighted_norm", "mass"];
        let cols = csv_columns(&read_text(&diag)?, &names);
        let series: Vec<Series> = names
            .iter()
            .zip(cols)
            .map(|(n, p)| Series {
                name: n.to_string(),
                points: p,
            })
            .collect();
        write_text(
            &dir.join("limit_norms.svg"),
            &line_chart("Limit run norms", "t", "value", Scale::Linear, Scale::Log, &series),
        )?;
    }
    Ok(())
}

fn write_summary(out: &Path, records: &[ErrorRecord], s: &Summary) -> Result<(), HarnessError> {
    for (name, text) in summary_tables(records, s) {
        write_text(&out.join(name), &text)?;
    }
    write_plots(out, s)
}

/// Runs one grid system into `dir`, returning the run and, if asked, its density snapshots.
fn run_stream(
    cfg: &ExperimentConfig,
    mode: LimitRunMode,
    dir: &Path,
    keep_every_step: bool,
    keep_f: bool,
) -> Result<(LimitRun, Vec<PhaseSpaceDensity>), HarnessError> {
    let start = Instant::now();
    ensure_dir(dir)?;
    let mut fs = Vec::new();
    let run = run_limit(cfg, mode, keep_every_step, |idx, _, _, u, f| {
        let p = snapshot_path(dir, "u", idx, "kfld");
        io_at(&p, write_field(&p, u))?;
        let p = snapshot_path(dir, "f", idx, "kphd");
        io_at(&p, write_density(&p, f))?;
        if keep_f {
            fs.push(f.clone());
        }
        Ok(())
    })?;
    write_index(dir, &run.steps, &run.times)?;
    write_text(&dir.join("diagnostics.csv"), &run.diagnostics_csv)?;
    Manifest {
        kind: mode.label(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: cfg.hash(),
        seeds: Vec::new(),
        sigma: cfg.sigma,
        sigma_n: match mode {
            LimitRunMode::Auxiliary(n) => vec![(n, run.sigma)],
            LimitRunMode::Plain => Vec::new(),
        },
        workers: 1,
        wall_time_s: start.elapsed().as_secs_f64(),
        warnings: run.warnings.clone(),
        failures: Vec::new(),
        notes: vec![format!("mass {:.15e} -> {:.15e}", run.initial_mass, run.final_mass)],
    }
    .write(dir)?;
    Ok((run, fs))
}

struct GridStream {
    times: Vec<f64>,
    u: Vec<SpectralField>,
    f: Vec<PhaseSpaceDensity>,
}

impl GridStream {
    fn stream(&self) -> Stream<'_> {
        Stream {
            t: &self.times,
            u: &self.u,
            f: &self.f,
        }
    }
}

fn read_stream(dir: &Path) -> Result<GridStream, HarnessError> {
    let (_, times) = read_index(dir)?;
    let mut u = Vec::with_capacity(times.len());
    let mut f = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        let p = snapshot_path(dir, "u", i, "kfld");
        u.push(io_at(&p, read_field(&p))?);
        let p = snapshot_path(dir, "f", i, "kphd");
        f.push(io_at(&p, read_density(&p))?);
    }
    Ok(GridStream { times, u, f })
}

/// Snapshots of one particle run, the input to `cell_record`.
#[derive(Debug, Clone)]
pub struct CellStream {
    pub n: usize,
    pub seed: u64,
    pub sigma_n: f64,
    pub times: Vec<f64>,
    pub u: Vec<SpectralField>,
    pub particles: Vec<ParticleEnsemble>,
    pub limit_particles: Vec<ParticleEnsemble>,
}

impl From<CoupledRun> for CellStream {
    fn from(r: CoupledRun) -> Self {
        Self {
            n: r.n,
            seed: r.seed,
            sigma_n: r.sigma_n,
            times: r.times,
            u: r.u,
            particles: r.particles,
            limit_particles: r.limit_particles,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CellInfo {
    n: usize,
    seed: u64,
    sigma_n: f64,
    sigma: f64,
    config_hash: String,
    wall_time_s: f64,
}

fn cell_dir(out: &Path, n: usize, seed: u64) -> PathBuf {
    out.join("cells").join(format!("N{n}_s{seed}"))
}

fn write_cell(dir: &Path, cfg: &ExperimentConfig, run: &CoupledRun, wall_time_s: f64) -> Result<(), HarnessError> {
    ensure_dir(dir)?;
    for (i, u) in run.u.iter().enumerate() {
        let p = snapshot_path(dir, "u", i, "kfld");
        io_at(&p, write_field(&p, u))?;
        let p = snapshot_path(dir, "p", i, "kprt");
        io_at(&p, write_particles(&p, &run.particles[i]))?;
        if let Some(lp) = run.limit_particles.get(i) {
            let p = snapshot_path(dir, "lp", i, "kprt");
            io_at(&p, write_particles(&p, lp))?;
        }
    }
    write_index(dir, &run.steps, &run.times)?;
    write_text(&dir.join("diagnostics.csv"), &run.diagnostics_csv)?;
    let info = CellInfo {
        n: run.n,
        seed: run.seed,
        sigma_n: run.sigma_n,
        sigma: cfg.sigma,
        config_hash: cfg.hash(),
        wall_time_s,
    };
    write_text(&dir.join("cell.json"), &serde_json::to_string_pretty(&info).expect("cell info serializes"))
}

fn read_cell(dir: &Path) -> Result<CellStream, HarnessError> {
    let path = dir.join("cell.json");
    let info: CellInfo =
        serde_json::from_str(&read_text(&path)?).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    let (steps, times) = read_index(dir)?;
    let mut cell = CellStream {
        n: info.n,
        seed: info.seed,
        sigma_n: info.sigma_n,
        times,
        u: Vec::new(),
        particles: Vec::new(),
        limit_particles: Vec::new(),
    };
    for (i, &step) in steps.iter().enumerate() {
        let p = snapshot_path(dir, "u", i, "kfld");
        cell.u.push(io_at(&p, read_field(&p))?);
        let p = snapshot_path(dir, "p", i, "kprt");
        let mut e = io_at(&p, read_particles(&p, info.seed, info.sigma_n))?;
        e.step = step as u64;
        cell.particles.push(e);
        let p = snapshot_path(dir, "lp", i, "kprt");
        if p.exists() {
            let mut e = io_at(&p, read_particles(&p, info.seed, info.sigma))?;
            e.step = step as u64;
            cell.limit_particles.push(e);
        }
    }
    Ok(cell)
}

/// Error functionals of one cell against the limit stream. `rho` is `(rho_N, rho~_N)` of its `N`.
pub fn cell_record(
    cfg: &ExperimentConfig,
    limit_t: &[f64],
    limit_u: &[SpectralField],
    limit_f: &[PhaseSpaceDensity],
    cell: &CellStream,
    rho: (f64, f64),
) -> Result<ErrorRecord, HarnessError> {
    let m = limit_t.len();
    if cell.times.len() != m || cell.u.len() != m || cell.particles.len() != m || limit_u.len() != m || limit_f.len() != m
    {
        return Err(MetricsError::Misaligned(format!("cell has {} snapshots, limit {m}", cell.times.len())).into());
    }
    if let Some((a, b)) = cell.times.iter().zip(limit_t).find(|(a, b)| (*a - *b).abs() > 1e-9 * (1.0 + b.abs())) {
        return Err(MetricsError::Misaligned(format!("t={a} vs t={b}")).into());
    }
    if cell.limit_particles.len() != m {
        return Err(MetricsError::StreamMismatch("cell has no limit particle snapshots".into()).into());
    }
    let fam = cfg.family(cell.n)?;
    let grid = cfg.phase_grid()?;
    let k = f64::from(cfg.k);
    let (mut bessel, mut weighted, mut energy) = (0.0f64, 0.0f64, 0.0f64);
    let mut grad = Vec::with_capacity(m);
    for i in 0..m {
        bessel = bessel.max(bessel_error(&cell.u[i], &limit_u[i], cfg.gamma, cfg.p)?);
        energy = energy.max(energy_error(&cell.u[i], &limit_u[i])?);
        grad.push(gradient_error_sq(&cell.u[i], &limit_u[i])?);
        let f_n = empirical_density(&cell.particles[i], &fam, &grid).map_err(|e| HarnessError::Solver {
            run: format!("N{}_s{}", cell.n, cell.seed),
            step: i,
            message: e.to_string(),
        })?;
        weighted = weighted.max(weighted_error(&f_n, &limit_f[i], k)?);
    }
    Ok(ErrorRecord {
        n: cell.n,
        seed: cell.seed,
        sigma_n: cell.sigma_n,
        bessel,
        weighted,
        energy,
        dissipation: time_integral(limit_t, &grad),
        chaos: chaos_error(&cell.particles, &cell.limit_particles)?,
        rho: rho.0,
        rho_tilde: rho.1,
    })
}

fn aux_rho(cfg: &ExperimentConfig, n: usize, aux: &GridStream, limit: &GridStream) -> Result<(f64, f64), HarnessError> {
    let fam = cfg.family(n)?;
    let k = f64::from(cfg.k);
    let rho = rho_n(&aux.stream(), &limit.stream(), Some(&fam), cfg.gamma, cfg.p, k)?;
    let rho_t = rho_tilde_n(&aux.f, Some(&fam), k)?;
    Ok((rho, rho_t))
}

fn pool(workers: usize) -> Result<rayon::ThreadPool, HarnessError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))
}

fn check_config(cfg: &ExperimentConfig) -> Result<(), HarnessError> {
    let report = validate(cfg);
    if !report.passed() {
        return Err(HarnessError::Validation(report));
    }
    Ok(())
}

fn cells(cfg: &ExperimentConfig) -> Vec<(usize, u64)> {
    cfg.n_schedule
        .iter()
        .flat_map(|&n| cfg.seeds.iter().map(move |&s| (n, s)))
        .collect()
}

fn sigma_table(cfg: &ExperimentConfig) -> Result<Vec<(usize, f64)>, HarnessError> {
    cfg.n_schedule.iter().map(|&n| Ok((n, cfg.sigma_n(n)?))).collect()
}

/// Limit run, auxiliary runs per `N`, particle cells on `workers` threads, then metrics.
///
/// A failing cell or auxiliary run is recorded and skipped; a failing limit run aborts.
pub fn run_study(cfg: &ExperimentConfig, out: &Path, workers: usize, kind: StudyKind) -> Result<StudyOutcome, HarnessError> {
    check_config(cfg)?;
    check_study_schedule(cfg)?;
    let start = Instant::now();
    ensure_dir(out)?;
    write_text(&out.join("config.toml"), &cfg.to_toml())?;
    let (lrun, lf) = run_stream(cfg, LimitRunMode::Plain, &out.join("limit"), true, true)?;
    let limit = GridStream {
        times: lrun.times.clone(),
        u: lrun.u.clone(),
        f: lf,
    };
    let mut warnings = lrun.warnings.clone();
    let mut failures = Vec::new();
    let mut rho: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for &n in &cfg.n_schedule {
        if !cfg.auxiliary {
            rho.insert(n, (0.0, 0.0));
            continue;
        }
        let mode = LimitRunMode::Auxiliary(n);
        let res = run_stream(cfg, mode, &out.join(mode.label()), false, true).and_then(|(run, f)| {
            warnings.extend(run.warnings.iter().cloned());
            aux_rho(cfg, n, &GridStream { times: run.times, u: run.u, f }, &limit)
        });
        match res {
            Ok(r) => {
                rho.insert(n, r);
            }
            Err(e) => failures.push(format!("{}: {e}", mode.label())),
        }
    }
    let todo: Vec<(usize, u64)> = cells(cfg).into_iter().filter(|(n, _)| rho.contains_key(n)).collect();
    let results: Vec<Result<ErrorRecord, String>> = pool(workers)?.install(|| {
        todo.par_iter()
            .map(|&(n, seed)| {
                let t0 = Instant::now();
                let run = run_coupled(cfg, n, seed, Some(&lrun.u_every_step))?;
                write_cell(&cell_dir(out, n, seed), cfg, &run, t0.elapsed().as_secs_f64())?;
                cell_record(cfg, &limit.times, &limit.u, &limit.f, &run.into(), rho[&n])
            })
            .map(|r| r.map_err(|e| e.to_string()))
            .collect()
    });
    let mut records = Vec::new();
    for (&(n, seed), r) in todo.iter().zip(results) {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(format!("N{n}_s{seed}: {e}")),
        }
    }
    let summary = summarize(&records, cfg.sigma);
    write_summary(out, &records, &summary)?;
    let mut notes = vec![format!("kappa {:?}", summary.chaos_summary.first().map(|c| c.kappa))];
    if !cfg.auxiliary {
        notes.push("auxiliary runs disabled; rho columns are 0".into());
    }
    Manifest {
        kind: kind.label().into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: cfg.hash(),
        seeds: cfg.seeds.clone(),
        sigma: cfg.sigma,
        sigma_n: sigma_table(cfg)?,
        workers,
        wall_time_s: start.elapsed().as_secs_f64(),
        warnings: warnings.clone(),
        failures: failures.clone(),
        notes,
    }
    .write(out)?;
    Ok(StudyOutcome {
        dir: out.to_path_buf(),
        records,
        summary,
        failures,
        warnings,
    })
}

/// Errors, seed means and rate fits over the `N` schedule.
pub fn convergence_study(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<StudyOutcome, HarnessError> {
    run_study(cfg, out, workers, StudyKind::Convergence)
}

/// The same cells, read for the chaos tables: every cell carries noise-coupled limit particles.
pub fn chaos_study(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<StudyOutcome, HarnessError> {
    run_study(cfg, out, workers, StudyKind::Chaos)
}

/// Recomputes every table and plot of a study directory from its snapshots.
pub fn replot(dir: &Path) -> Result<StudyOutcome, HarnessError> {
    let cfg = ExperimentConfig::from_toml_str(&read_text(&dir.join("config.toml"))?)?;
    let manifest = Manifest::read(dir)?;
    let limit = read_stream(&dir.join("limit"))?;
    let mut failures = Vec::new();
    let mut rho: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for &n in &cfg.n_schedule {
        if !cfg.auxiliary {
            rho.insert(n, (0.0, 0.0));
            continue;
        }
        let adir = dir.join(LimitRunMode::Auxiliary(n).label());
        if !adir.join("index.csv").exists() {
            failures.push(format!("aux_N{n}: no snapshots"));
            continue;
        }
        let aux = read_stream(&adir)?;
        rho.insert(n, aux_rho(&cfg, n, &aux, &limit)?);
    }
    let mut records = Vec::new();
    for (n, seed) in cells(&cfg) {
        let Some(&r) = rho.get(&n) else { continue };
        let cdir = cell_dir(dir, n, seed);
        if !cdir.join("cell.json").exists() {
            failures.push(format!("N{n}_s{seed}: no snapshots"));
            continue;
        }
        let cell = read_cell(&cdir)?;
        records.push(cell_record(&cfg, &limit.times, &limit.u, &limit.f, &cell, r)?);
    }
    let summary = summarize(&records, cfg.sigma);
    write_summary(dir, &records, &summary)?;
    Ok(StudyOutcome {
        dir: dir.to_path_buf(),
        records,
        summary,
        failures,
        warnings: manifest.warnings,
    })
}

/// `run-limit`: the plain limit run, and the auxiliary run per `N` when enabled.
pub fn write_limit_runs(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<String>, HarnessError> {
    check_config(cfg)?;
    let start = Instant::now();
    ensure_dir(out)?;
    write_text(&out.join("config.toml"), &cfg.to_toml())?;
    let (run, _) = run_stream(cfg, LimitRunMode::Plain, &out.join("limit"), false, false)?;
    let mut warnings = run.warnings;
    if cfg.auxiliary {
        for &n in &cfg.n_schedule {
            let mode = LimitRunMode::Auxiliary(n);
            let (run, _) = run_stream(cfg, mode, &out.join(mode.label()), false, false)?;
            warnings.extend(run.warnings);
        }
    }
    Manifest {
        kind: "run-limit".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: cfg.hash(),
        seeds: Vec::new(),
        sigma: cfg.sigma,
        sigma_n: if cfg.auxiliary { sigma_table(cfg)? } else { Vec::new() },
        workers: 1,
        wall_time_s: start.elapsed().as_secs_f64(),
        warnings: warnings.clone(),
        failures: Vec::new(),
        notes: Vec::new(),
    }
    .write(out)?;
    Ok(warnings)
}

/// `run-coupled`: every `(N, seed)` particle run of the config, without a limit reference.
/// Returns the failed cells.
pub fn write_coupled_runs(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<Vec<String>, HarnessError> {
    check_config(cfg)?;
    let start = Instant::now();
    ensure_dir(out)?;
    write_text(&out.join("config.toml"), &cfg.to_toml())?;
    let todo = cells(cfg);
    let results: Vec<Result<(), String>> = pool(workers)?.install(|| {
        todo.par_iter()
            .map(|&(n, seed)| {
                let t0 = Instant::now();
                let run = run_coupled(cfg, n, seed, None)?;
                write_cell(&cell_dir(out, n, seed), cfg, &run, t0.elapsed().as_secs_f64())
            })
            .map(|r| r.map_err(|e| e.to_string()))
            .collect()
    });
    let failures: Vec<String> = todo
        .iter()
        .zip(results)
        .filter_map(|(&(n, seed), r)| r.err().map(|e| format!("N{n}_s{seed}: {e}")))
        .collect();
    Manifest {
        kind: "run-coupled".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: cfg.hash(),
        seeds: cfg.seeds.clone(),
        sigma: cfg.sigma,
        sigma_n: sigma_table(cfg)?,
        workers,
        wall_time_s: start.elapsed().as_secs_f64(),
        warnings: Vec::new(),
        failures: failures.clone(),
        notes: Vec::new(),
    }
    .write(out)?;
    Ok(failures)
}
