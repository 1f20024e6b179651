use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::mollifier::{CutoffSpec, MollifierFamily, XKernelKind};
use crate::particles::{sigma_schedule, InitialLaw, SpatialLaw, VelocityLaw};
use crate::spectral::{read_field, InterpScheme, SpectralField, TorusGrid};
use crate::vfp::{read_density, PhaseGrid, PhaseSpaceDensity};

/// Initial fluid velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialField {
    Zero,
    /// `amplitude * (sin 2 pi x_2, 0, ...)`.
    Shear { amplitude: f64 },
    /// A `KFLD` file on the fluid grid.
    Snapshot { path: PathBuf },
}

/// Initial kinetic density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialDensity {
    /// Product law, sampled on the phase grid and drawn i.i.d. for particles.
    Law { x: SpatialLaw, v: VelocityLaw },
    /// A `KPHD` file on the phase grid; particles are drawn from it.
    Snapshot { path: PathBuf },
}

/// How the particle noise level depends on `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaRule {
    /// `sigma_N = max(sigma, (ln N)^{-1/4})`.
    #[default]
    Schedule,
    /// `sigma_N = sigma`.
    Fixed,
}

fn default_snapshot_every() -> usize {
    10
}

fn default_true() -> bool {
    true
}

/// One file fully determines a run or a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub t_end: f64,
    pub dt: f64,
    pub fluid_res: usize,
    pub phase_x_res: usize,
    pub phase_v_res: usize,
    pub v_max: f64,
    pub n_schedule: Vec<usize>,
    pub seeds: Vec<u64>,
    pub sigma: f64,
    #[serde(default)]
    pub sigma_rule: SigmaRule,
    pub alpha: f64,
    pub beta: f64,
    /// Cut-off level `A`.
    pub cutoff: f64,
    pub gamma: f64,
    pub p: f64,
    pub k: u32,
    pub initial_u: InitialField,
    pub initial_f: InitialDensity,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
    #[serde(default)]
    pub x_kernel: XKernelKind,
    #[serde(default)]
    pub interp: InterpScheme,
    /// Run the cut-off/`sigma_N` auxiliary system per `N` for `rho_N`.
    #[serde(default = "default_true")]
    pub auxiliary: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// The acceptance scenario.
    pub fn default_scenario() -> Self {
        Self {
            d: 2,
            t_end: 0.5,
            dt: 0.01,
            fluid_res: 64,
            phase_x_res: 64,
            phase_v_res: 48,
            v_max: 3.0,
            n_schedule: vec![250, 500, 1000, 2000, 4000],
            seeds: (1..=8).collect(),
            sigma: 0.5,
            sigma_rule: SigmaRule::Schedule,
            alpha: 0.1,
            beta: 0.05,
            cutoff: 4.0,
            gamma: 0.75,
            p: 4.0,
            k: 3,
            initial_u: InitialField::Shear { amplitude: 0.5 },
            initial_f: InitialDensity::Law {
                x: SpatialLaw::Uniform,
                v: VelocityLaw {
                    mean: vec![0.0, 0.0],
                    std: 0.3,
                },
            },
            snapshot_every: 10,
            x_kernel: XKernelKind::VonMises,
            interp: InterpScheme::Spline4,
            auxiliary: true,
            output_dir: None,
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self, HarnessError> {
        toml::from_str(s).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let s = std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&s)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        if let InitialField::Snapshot { path } = &mut self.initial_u {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
        if let InitialDensity::Snapshot { path } = &mut self.initial_f {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn with_seed_offset(mut self, offset: u64) -> Self {
        for s in &mut self.seeds {
            *s = s.wrapping_add(offset);
        }
        self
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Step indices at which snapshots are stored: every `snapshot_every` and the last.
    pub fn snapshot_steps(&self) -> Vec<usize> {
        let n = self.steps();
        let every = self.snapshot_every.max(1);
        let mut s: Vec<usize> = (0..=n).step_by(every).collect();
        if s.last() != Some(&n) {
            s.push(n);
        }
        s
    }

    pub fn fluid_grid(&self) -> Result<TorusGrid, HarnessError> {
        TorusGrid::cubic(self.d, self.fluid_res).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn phase_grid(&self) -> Result<PhaseGrid, HarnessError> {
        let x = TorusGrid::cubic(self.d, self.phase_x_res).map_err(|e| HarnessError::Config(e.to_string()))?;
        PhaseGrid::new(x, &vec![self.phase_v_res; self.d], self.v_max).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn family(&self, n: usize) -> Result<MollifierFamily, HarnessError> {
        MollifierFamily::new(self.alpha, self.beta, n as u64, self.d)
            .map(|f| f.with_x_kernel(self.x_kernel))
            .map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn cutoff_spec(&self) -> CutoffSpec {
        CutoffSpec::new(self.cutoff)
    }

    pub fn sigma_n(&self, n: usize) -> Result<f64, HarnessError> {
        match self.sigma_rule {
            SigmaRule::Fixed => Ok(self.sigma),
            SigmaRule::Schedule => sigma_schedule(self.sigma, n).map_err(|e| HarnessError::Config(e.to_string())),
        }
    }

    pub fn initial_field(&self) -> Result<SpectralField, HarnessError> {
        let g = self.fluid_grid()?;
        let u = match &self.initial_u {
            InitialField::Zero => SpectralField::zeros(&g, self.d),
            InitialField::Shear { amplitude } => {
                let a = *amplitude;
                SpectralField::from_fn(&g, self.d, move |x, c| if c == 0 { a * (2.0 * PI * x[1]).sin() } else { 0.0 })
            }
            InitialField::Snapshot { path } => {
                let u = read_field(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                if u.grid() != &g || u.components() != self.d {
                    return Err(HarnessError::Config(format!("{} does not match the fluid grid", path.display())));
                }
                u
            }
        };
        u.leray_project().map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn initial_law(&self) -> Option<InitialLaw> {
        match &self.initial_f {
            InitialDensity::Law { x, v } => Some(InitialLaw { x: x.clone(), v: v.clone() }),
            InitialDensity::Snapshot { .. } => None,
        }
    }

    pub fn initial_density(&self) -> Result<PhaseSpaceDensity, HarnessError> {
        let g = self.phase_grid()?;
        match &self.initial_f {
            InitialDensity::Law { x, v } => InitialLaw { x: x.clone(), v: v.clone() }
                .on_grid(&g)
                .map_err(|e| HarnessError::Config(e.to_string())),
            InitialDensity::Snapshot { path } => {
                let f = read_density(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
                if f.grid() != &g {
                    return Err(HarnessError::Config(format!("{} does not match the phase grid", path.display())));
                }
                Ok(f)
            }
        }
    }
}

/// One named constraint and whether it holds.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub label: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, label: &str, passed: bool, detail: String) {
        self.checks.push(Check {
            label: label.to_string(),
            passed,
            detail,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{} {}: {}", if c.passed { "ok  " } else { "FAIL" }, c.label, c.detail)?;
        }
        Ok(())
    }
}

/// Checks the structural assumptions on the exponents, the mollifier scaling and
/// the cut-off, then the numerical set-up.
pub fn validate(cfg: &ExperimentConfig) -> ValidationReport {
    let mut r = ValidationReport::default();
    let d = cfg.d as f64;
    r.push("Dimension", (2..=3).contains(&cfg.d), format!("d = {}", cfg.d));
    r.push("Assumption 1: p > d", cfg.p > d, format!("p = {}, d = {}", cfg.p, cfg.d));
    r.push(
        "Assumption 1: d/p < gamma < 1",
        cfg.gamma > d / cfg.p && cfg.gamma < 1.0,
        format!("gamma = {}, d/p = {:.4}", cfg.gamma, d / cfg.p),
    );
    r.push("Assumption 1: k >= 3", cfg.k >= 3, format!("k = {}", cfg.k));
    if cfg.d == 3 {
        let lhs = cfg.gamma / 2.0 + 1.5 * (0.5 - 1.0 / cfg.p);
        r.push(
            "Assumption 1 (d = 3): gamma/2 + 3/2 (1/2 - 1/p) < 1",
            lhs < 1.0,
            format!("lhs = {lhs:.4}"),
        );
    }
    r.push(
        "Assumption 2(a): 0 < beta < alpha <= 1",
        cfg.beta > 0.0 && cfg.alpha > cfg.beta && cfg.alpha <= 1.0,
        format!("alpha = {}, beta = {}", cfg.alpha, cfg.beta),
    );
    let lhs = d * cfg.beta + (d + 1.0) * cfg.alpha;
    r.push(
        "Assumption 2(a): d beta + (d+1) alpha < 1/2",
        lhs < 0.5,
        format!("d beta + (d+1) alpha = {lhs:.4}"),
    );
    r.push("Cut-off: A > 0", cfg.cutoff > 0.0 && cfg.cutoff.is_finite(), format!("A = {}", cfg.cutoff));
    r.push("Noise: sigma >= 0", cfg.sigma >= 0.0 && cfg.sigma.is_finite(), format!("sigma = {}", cfg.sigma));

    let steps_ok = cfg.dt > 0.0 && cfg.t_end > 0.0 && {
        let n = (cfg.t_end / cfg.dt).round();
        n >= 1.0 && (n * cfg.dt - cfg.t_end).abs() <= 1e-9 * cfg.t_end
    };
    r.push("Time grid: T a positive multiple of dt", steps_ok, format!("T = {}, dt = {}", cfg.t_end, cfg.dt));
    r.push("Snapshots: snapshot_every >= 1", cfg.snapshot_every >= 1, format!("{}", cfg.snapshot_every));
    let even = |n: usize| n >= 4 && n % 2 == 0;
    r.push(
        "Grids: even resolutions >= 4",
        even(cfg.fluid_res) && even(cfg.phase_x_res) && cfg.phase_v_res >= 4,
        format!("fluid {}, phase x {}, phase v {}", cfg.fluid_res, cfg.phase_x_res, cfg.phase_v_res),
    );
    r.push(
        "Grids: phase x grid equals fluid grid",
        cfg.fluid_res == cfg.phase_x_res,
        format!("{} vs {}", cfg.phase_x_res, cfg.fluid_res),
    );
    r.push("Grids: V_max > 0", cfg.v_max > 0.0, format!("V_max = {}", cfg.v_max));
    r.push(
        "Particles: N schedule nonempty, every N >= 2",
        !cfg.n_schedule.is_empty() && cfg.n_schedule.iter().all(|&n| n >= 2),
        format!("{:?}", cfg.n_schedule),
    );
    r.push("Particles: at least one seed", !cfg.seeds.is_empty(), format!("{} seeds", cfg.seeds.len()));
    let law_ok = match &cfg.initial_f {
        InitialDensity::Law { x, v } => InitialLaw { x: x.clone(), v: v.clone() }.validate(cfg.d).is_ok(),
        InitialDensity::Snapshot { path } => path.exists(),
    };
    r.push("Initial density", law_ok, format!("{:?}", cfg.initial_f));
    let field_ok = match &cfg.initial_u {
        InitialField::Snapshot { path } => path.exists(),
        InitialField::Shear { amplitude } => amplitude.is_finite(),
        InitialField::Zero => true,
    };
    r.push("Initial field", field_ok, format!("{:?}", cfg.initial_u));

    if r.passed() {
        if let Some(&n) = cfg.n_schedule.iter().max() {
            let res = cfg.family(n).and_then(|fam| {
                let g = cfg.phase_grid()?;
                let hx = 1.0 / cfg.phase_x_res as f64;
                let hv = g.v_spacing(0);
                Ok((fam.x_width(), fam.v_radius(), hx, hv))
            });
            match res {
                Ok((w, rad, hx, hv)) => r.push(
                    "Resolution: kernel resolved at the largest N",
                    hx <= 0.5 * w && hv <= 0.5 * rad && rad <= cfg.v_max,
                    format!("h_x = {hx:.4} vs x-width/2 = {:.4}; h_v = {hv:.4} vs R/2 = {:.4}", 0.5 * w, 0.5 * rad),
                ),
                Err(e) => r.push("Resolution: kernel resolved at the largest N", false, e.to_string()),
            }
        }
    }
    r
}

/// Study-specific requirement: at least three distinct ascending `N`.
pub fn check_study_schedule(cfg: &ExperimentConfig) -> Result<(), HarnessError> {
    let s = &cfg.n_schedule;
    if s.len() < 3 || s.windows(2).any(|w| w[0] >= w[1]) {
        return Err(HarnessError::Config(format!(
            "a study needs at least 3 distinct N in ascending order, got {s:?}"
        )));
    }
    Ok(())
}
