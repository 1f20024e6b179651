use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::ParticleError;
use crate::mollifier::CutoffSpec;
use crate::spectral::{wrap_unit, InterpScheme, Interpolator, SpectralField};

/// Words of the ChaCha stream reserved for one particle at one step.
const WORDS_PER_STEP: u32 = 16;

/// `sigma_N = max(sigma, (ln N)^{-1/4})`.
pub fn sigma_schedule(sigma: f64, n: usize) -> Result<f64, ParticleError> {
    if n < 2 {
        return Err(ParticleError::TooFewParticles(n));
    }
    Ok(sigma.max((n as f64).ln().powf(-0.25)))
}

/// Standard normal increments for particle `index` at time step `step`.
///
/// A pure function of `(seed, index, step)`: stream `index` of the ChaCha8
/// generator keyed by `seed`, positioned at a block reserved for `step`.
pub fn noise(seed: u64, index: usize, step: u64, out: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng.set_word_pos(u128::from(step) << WORDS_PER_STEP);
    for z in out {
        *z = StandardNormal.sample(&mut rng);
    }
}

/// `N` particles in `T^d x R^d`, stored row-major (`x[i*d + a]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    dim: usize,
    x: Vec<f64>,
    v: Vec<f64>,
    pub seed: u64,
    pub sigma: f64,
    pub step: u64,
}

impl ParticleEnsemble {
    pub fn new(dim: usize, x: Vec<f64>, v: Vec<f64>, seed: u64, sigma: f64) -> Result<Self, ParticleError> {
        if x.len() != v.len() || x.len() % dim != 0 {
            return Err(ParticleError::Shape(format!(
                "position/velocity arrays of length {} and {} do not match dimension {dim}",
                x.len(),
                v.len()
            )));
        }
        let x = x.into_iter().map(wrap_unit).collect();
        Ok(Self {
            dim,
            x,
            v,
            seed,
            sigma,
            step: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.x.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.x
    }

    pub fn velocities(&self) -> &[f64] {
        &self.v
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        &self.v[i * self.dim..(i + 1) * self.dim]
    }

    /// `(1/2N) sum |V_i|^2`.
    pub fn kinetic_energy(&self) -> f64 {
        0.5 * self.v.iter().map(|c| c * c).sum::<f64>() / self.len() as f64
    }

    /// `cutoff(u(X_i))` for every particle, row-major.
    pub fn drift(&self, u: &SpectralField, scheme: InterpScheme, cutoff: &CutoffSpec) -> Vec<f64> {
        let d = self.dim;
        let interp = Interpolator::new(u, scheme);
        let mut out = vec![0.0; self.x.len()];
        out.par_chunks_mut(d).zip(self.x.par_chunks(d)).for_each(|(o, x)| {
            interp.eval_into(x, o);
            cutoff.apply(o);
        });
        out
    }

    /// Advances one step against the frozen per-particle drift `c_i`:
    /// exact Ornstein-Uhlenbeck update in `V`, trapezoidal update in `X`.
    pub fn advance(&mut self, drift: &[f64], dt: f64) -> Result<(), ParticleError> {
        let d = self.dim;
        let e1 = (-dt).exp();
        let amp = self.sigma * ((1.0 - (-2.0 * dt).exp()) / 2.0).sqrt();
        let (seed, step) = (self.seed, self.step);
        let bad = self
            .x
            .par_chunks_mut(d)
            .zip(self.v.par_chunks_mut(d))
            .zip(drift.par_chunks(d))
            .enumerate()
            .map(|(i, ((x, v), c))| {
                let mut xi = [0.0; 3];
                if amp > 0.0 {
                    noise(seed, i, step, &mut xi[..d]);
                }
                let mut ok = true;
                for a in 0..d {
                    let vn = e1 * v[a] + (1.0 - e1) * c[a] + amp * xi[a];
                    x[a] = wrap_unit(x[a] + 0.5 * dt * (v[a] + vn));
                    v[a] = vn;
                    ok &= vn.is_finite() && x[a].is_finite();
                }
                if ok {
                    usize::MAX
                } else {
                    i
                }
            })
            .min()
            .unwrap_or(usize::MAX);
        if bad != usize::MAX {
            return Err(ParticleError::NonFinite { index: bad, step });
        }
        self.step += 1;
        Ok(())
    }

    /// One particle step in the fluid field `u`.
    pub fn step_in_field(
        &mut self,
        u: &SpectralField,
        dt: f64,
        cutoff: &CutoffSpec,
        scheme: InterpScheme,
    ) -> Result<(), ParticleError> {
        let c = self.drift(u, scheme, cutoff);
        self.advance(&c, dt)
    }
}
