use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ParticleEnsemble, ParticleError};
use crate::vfp::{PhaseGrid, PhaseSpaceDensity};

const INIT_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Spatial marginal of the initial law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpatialLaw {
    Uniform,
    /// Density `1 + amplitude * cos(2 pi x_axis)`.
    Cosine { amplitude: f64, axis: usize },
}

/// Velocity marginal: isotropic Gaussian.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityLaw {
    #[serde(default)]
    pub mean: Vec<f64>,
    pub std: f64,
}

/// Product initial law `F(x, v) = g(x) h(v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialLaw {
    pub x: SpatialLaw,
    pub v: VelocityLaw,
}

impl InitialLaw {
    pub fn maxwellian(std: f64) -> Self {
        Self {
            x: SpatialLaw::Uniform,
            v: VelocityLaw { mean: Vec::new(), std },
        }
    }

    fn mean(&self, d: usize) -> Vec<f64> {
        let mut m = self.v.mean.clone();
        m.resize(d, 0.0);
        m
    }

    pub fn validate(&self, d: usize) -> Result<(), ParticleError> {
        if !(self.v.std > 0.0 && self.v.std.is_finite()) {
            return Err(ParticleError::InitialLaw(format!(
                "velocity std must be positive, got {}",
                self.v.std
            )));
        }
        if self.v.mean.len() > d {
            return Err(ParticleError::InitialLaw("velocity mean has too many components".into()));
        }
        if let SpatialLaw::Cosine { amplitude, axis } = self.x {
            if !(amplitude.abs() <= 1.0) || axis >= d {
                return Err(ParticleError::InitialLaw(format!(
                    "cosine law needs |amplitude| <= 1 and axis < {d}"
                )));
            }
        }
        Ok(())
    }

    /// Density value at `(x, v)`.
    pub fn density(&self, x: &[f64], v: &[f64]) -> f64 {
        let d = x.len();
        let g = match self.x {
            SpatialLaw::Uniform => 1.0,
            SpatialLaw::Cosine { amplitude, axis } => 1.0 + amplitude * (2.0 * PI * x[axis]).cos(),
        };
        let m = self.mean(d);
        let s2 = self.v.std * self.v.std;
        let r2: f64 = v.iter().zip(&m).map(|(a, b)| (a - b) * (a - b)).sum();
        g * (-r2 / (2.0 * s2)).exp() / (2.0 * PI * s2).powf(0.5 * d as f64)
    }

    /// Cell-centre samples on `grid`, rescaled to unit discrete mass.
    pub fn on_grid(&self, grid: &PhaseGrid) -> Result<PhaseSpaceDensity, ParticleError> {
        self.validate(grid.dim())?;
        let mut f = PhaseSpaceDensity::from_fn(grid, |x, v| self.density(x, v));
        f.normalize().map_err(|e| ParticleError::InitialLaw(e.to_string()))?;
        Ok(f)
    }

    /// `N` i.i.d. draws; particle `i` uses its own stream so the draw is
    /// independent of `N` and of evaluation order.
    pub fn sample(&self, d: usize, n: usize, seed: u64, sigma: f64) -> Result<ParticleEnsemble, ParticleError> {
        self.validate(d)?;
        let m = self.mean(d);
        let mut x = Vec::with_capacity(n * d);
        let mut v = Vec::with_capacity(n * d);
        for i in 0..n {
            let mut rng = init_rng(seed, i);
            match self.x {
                SpatialLaw::Uniform => x.extend((0..d).map(|_| rng.random::<f64>())),
                SpatialLaw::Cosine { amplitude, axis } => loop {
                    let p: Vec<f64> = (0..d).map(|_| rng.random::<f64>()).collect();
                    let accept = (1.0 + amplitude * (2.0 * PI * p[axis]).cos()) / (1.0 + amplitude.abs());
                    if rng.random::<f64>() < accept {
                        x.extend(p);
                        break;
                    }
                },
            }
            for &mean in m.iter() {
                let z: f64 = StandardNormal.sample(&mut rng);
                v.push(mean + self.v.std * z);
            }
        }
        ParticleEnsemble::new(d, x, v, seed, sigma)
    }
}

fn init_rng(seed: u64, i: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ INIT_SALT);
    rng.set_stream(i as u64);
    rng
}

/// I.i.d. draws from a gridded density: a cell is chosen with probability
/// proportional to its mass, then the point is uniform within the cell.
pub fn sample_from_density(
    f: &PhaseSpaceDensity,
    n: usize,
    seed: u64,
    sigma: f64,
) -> Result<ParticleEnsemble, ParticleError> {
    let g = f.grid();
    let d = g.dim();
    if f.min_value() < 0.0 {
        return Err(ParticleError::InitialLaw("gridded density has negative values".into()));
    }
    let mut cdf = Vec::with_capacity(g.len());
    let mut acc = 0.0;
    for &w in f.values() {
        acc += w;
        cdf.push(acc);
    }
    if !(acc > 0.0 && acc.is_finite()) {
        return Err(ParticleError::InitialLaw("gridded density is not normalizable".into()));
    }
    let nx = g.nx();
    let mut x = Vec::with_capacity(n * d);
    let mut v = Vec::with_capacity(n * d);
    for i in 0..n {
        let mut rng = init_rng(seed, i);
        let target = rng.random::<f64>() * acc;
        let cell = cdf.partition_point(|&c| c <= target).min(g.len() - 1);
        let (vf, xf) = (cell / nx, cell % nx);
        let xi = g.x_grid().unravel(xf);
        let vi = g.v_unravel(vf);
        for a in 0..d {
            let h = g.x_grid().spacing(a);
            x.push((xi[a] as f64 + rng.random::<f64>()) * h);
        }
        for a in 0..d {
            let h = g.v_spacing(a);
            v.push(-g.v_max() + (vi[a] as f64 + rng.random::<f64>()) * h);
        }
    }
    ParticleEnsemble::new(d, x, v, seed, sigma)
}
