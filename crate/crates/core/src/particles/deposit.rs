use rayon::prelude::*;

use super::{ParticleEnsemble, ParticleError};
use crate::mollifier::MollifierFamily;
use crate::spectral::TorusGrid;
use crate::vfp::{PhaseGrid, PhaseSpaceDensity};

/// Particle blocks for deterministic parallel reductions; fixed so the
/// summation order does not depend on the number of worker threads.
const REDUCTION_BLOCKS: usize = 16;

#[derive(Debug, Clone)]
struct AxisWeights {
    idx: Vec<u32>,
    w: Vec<f64>,
}

/// Separable spatial kernel weights `theta^{1,N}(x_j - X_i)` per particle and axis.
#[derive(Debug, Clone)]
pub struct XWeights {
    dim: usize,
    res: Vec<usize>,
    axes: Vec<AxisWeights>,
}

impl XWeights {
    pub fn new(positions: &[f64], dim: usize, fam: &MollifierFamily, grid: &TorusGrid) -> Self {
        let res = grid.res().to_vec();
        let half = fam.x_halfwidth();
        let axes = positions
            .par_iter()
            .enumerate()
            .map(|(k, &xc)| {
                let n = res[k % dim];
                let nf = n as f64;
                let range: Box<dyn Iterator<Item = i64>> = match half {
                    None => Box::new(0..n as i64),
                    Some(w) => {
                        let lo = ((xc - w) * nf).ceil() as i64;
                        let hi = ((xc + w) * nf).floor() as i64;
                        if hi - lo + 1 >= n as i64 {
                            Box::new(0..n as i64)
                        } else {
                            Box::new(lo..=hi)
                        }
                    }
                };
                let mut idx = Vec::new();
                let mut wv = Vec::new();
                for j in range {
                    let jj = j.rem_euclid(n as i64) as usize;
                    idx.push(jj as u32);
                    wv.push(fam.theta1_axis(jj as f64 / nf - xc));
                }
                AxisWeights { idx, w: wv }
            })
            .collect();
        Self { dim, res, axes }
    }

    fn particle(&self, i: usize) -> &[AxisWeights] {
        &self.axes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn len(&self) -> usize {
        self.axes.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.axes.is_empty()
    }
}

/// `dst[x] += c * prod_a w_a(x_a)` over the separable window.
fn add_outer(dst: &mut [f64], res: &[usize], ax: &[AxisWeights], c: f64) {
    match ax.len() {
        1 => {
            for (&i, &w) in ax[0].idx.iter().zip(&ax[0].w) {
                dst[i as usize] += c * w;
            }
        }
        2 => {
            let n1 = res[1];
            for (&i, &wi) in ax[0].idx.iter().zip(&ax[0].w) {
                let row = &mut dst[i as usize * n1..(i as usize + 1) * n1];
                let ci = c * wi;
                for (&j, &wj) in ax[1].idx.iter().zip(&ax[1].w) {
                    row[j as usize] += ci * wj;
                }
            }
        }
        _ => {
            let (n1, n2) = (res[1], res[2]);
            for (&i, &wi) in ax[0].idx.iter().zip(&ax[0].w) {
                for (&j, &wj) in ax[1].idx.iter().zip(&ax[1].w) {
                    let base = (i as usize * n1 + j as usize) * n2;
                    let row = &mut dst[base..base + n2];
                    let cij = c * wi * wj;
                    for (&k, &wk) in ax[2].idx.iter().zip(&ax[2].w) {
                        row[k as usize] += cij * wk;
                    }
                }
            }
        }
    }
}

/// `(1/N) sum_i w_i delta^N_{X_i}(x)` for `m`-component particle weights `w` (row-major `N x m`).
pub fn deposit_x(xw: &XWeights, weights: &[f64], m: usize, grid: &TorusGrid) -> Vec<Vec<f64>> {
    let n = xw.len();
    let nx = grid.len();
    let block = n.div_ceil(REDUCTION_BLOCKS).max(1);
    let partials: Vec<Vec<Vec<f64>>> = (0..n.div_ceil(block))
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![vec![0.0; nx]; m];
            for i in b * block..((b + 1) * block).min(n) {
                let ax = xw.particle(i);
                for (c, out) in acc.iter_mut().enumerate() {
                    let w = weights[i * m + c];
                    if w != 0.0 {
                        add_outer(out, &xw.res, ax, w);
                    }
                }
            }
            acc
        })
        .collect();
    let mut out = vec![vec![0.0; nx]; m];
    for p in partials {
        for (o, q) in out.iter_mut().zip(p) {
            for (a, b) in o.iter_mut().zip(q) {
                *a += b;
            }
        }
    }
    let inv = 1.0 / n.max(1) as f64;
    for o in &mut out {
        for a in o.iter_mut() {
            *a *= inv;
        }
    }
    out
}

fn check_resolution(fam: &MollifierFamily, grid: &PhaseGrid) -> Result<(), ParticleError> {
    let xw = fam.x_width();
    for a in 0..grid.dim() {
        let h = grid.x_grid().spacing(a);
        if h > 0.5 * xw {
            return Err(ParticleError::Resolution(format!(
                "x spacing {h} exceeds half the kernel width {xw}; need at least {} cells per axis",
                (2.0 / xw).ceil()
            )));
        }
        let hv = grid.v_spacing(a);
        let r = fam.v_radius();
        if hv > 0.5 * r {
            return Err(ParticleError::Resolution(format!(
                "v spacing {hv} exceeds half the kernel radius {r}; need at least {} cells per axis",
                (4.0 * grid.v_max() / r).ceil()
            )));
        }
    }
    Ok(())
}

/// Velocity cells hit by particle `V`'s kernel with weights rescaled to unit discrete mass.
fn v_weights(v: &[f64], fam: &MollifierFamily, grid: &PhaseGrid) -> Vec<(u32, f64)> {
    let d = grid.dim();
    let r = fam.v_radius();
    let mut lo = [0usize; 3];
    let mut cnt = [1usize; 3];
    for a in 0..d {
        let h = grid.v_spacing(a);
        let n = grid.v_res()[a] as i64;
        let l = (((v[a] - r + grid.v_max()) / h) - 0.5).ceil().max(0.0) as i64;
        let u = ((((v[a] + r + grid.v_max()) / h) - 0.5).floor() as i64).min(n - 1);
        if u < l {
            return Vec::new();
        }
        lo[a] = l as usize;
        cnt[a] = (u - l + 1) as usize;
    }
    let mut out = Vec::with_capacity(cnt[..d].iter().product());
    let mut total = 0.0;
    let mut rel = [0.0; 3];
    for i0 in 0..cnt[0] {
        for i1 in 0..cnt[1] {
            for i2 in 0..cnt[2] {
                let idx = [lo[0] + i0, lo[1] + i1, lo[2] + i2];
                for a in 0..d {
                    rel[a] = grid.v_center(a, idx[a]) - v[a];
                }
                let w = fam.theta2(&rel[..d]);
                if w > 0.0 {
                    out.push((grid.v_ravel(&idx[..d]) as u32, w));
                    total += w;
                }
            }
        }
    }
    let norm = 1.0 / (total * grid.v_cell_volume());
    for p in &mut out {
        p.1 *= norm;
    }
    out
}

/// Mollified empirical measure `F^N = (1/N) sum_i theta^N(x - X_i, v - V_i)` on the phase grid.
///
/// The velocity factor of every particle is rescaled to unit discrete mass, so the
/// deposited density carries mass 1 up to the spatial truncation.
pub fn empirical_density(
    ens: &ParticleEnsemble,
    fam: &MollifierFamily,
    grid: &PhaseGrid,
) -> Result<PhaseSpaceDensity, ParticleError> {
    check_resolution(fam, grid)?;
    let d = ens.dim();
    let n = ens.len();
    let xw = XWeights::new(ens.positions(), d, fam, grid.x_grid());
    let per_particle: Vec<Vec<(u32, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| v_weights(ens.velocity(i), fam, grid))
        .collect();
    let mut lists: Vec<Vec<(u32, f64)>> = vec![Vec::new(); grid.nv()];
    for (i, vw) in per_particle.iter().enumerate() {
        for &(vf, w) in vw {
            lists[vf as usize].push((i as u32, w));
        }
    }
    let nx = grid.nx();
    let inv = 1.0 / n as f64;
    let res = grid.x_grid().res().to_vec();
    let mut values = vec![0.0; grid.len()];
    values.par_chunks_mut(nx).zip(lists.par_iter()).for_each(|(row, list)| {
        for &(i, w) in list {
            add_outer(row, &res, xw.particle(i as usize), w * inv);
        }
    });
    let mut f = PhaseSpaceDensity::from_values(grid, values).map_err(|e| ParticleError::Shape(e.to_string()))?;
    f.t = 0.0;
    Ok(f)
}

/// Directly deposited `m_0^N = (1/N) sum delta^N_{X_i}` and `m_1^N = (1/N) sum V_i delta^N_{X_i}`.
pub fn empirical_moments(ens: &ParticleEnsemble, fam: &MollifierFamily, grid: &TorusGrid) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = ens.dim();
    let xw = XWeights::new(ens.positions(), d, fam, grid);
    let mut w = Vec::with_capacity(ens.len() * (d + 1));
    for i in 0..ens.len() {
        w.push(1.0);
        w.extend_from_slice(ens.velocity(i));
    }
    let mut out = deposit_x(&xw, &w, d + 1, grid);
    let m0 = out.remove(0);
    (m0, out)
}

/// Drag forcing `(1/N) sum_i (c_i - V_i) delta^N_{X_i}(x)`, with `c_i = cutoff(u(X_i))`
/// supplied by the caller (row-major `N x d`).
pub fn drag_forcing(
    ens: &ParticleEnsemble,
    drift: &[f64],
    fam: &MollifierFamily,
    grid: &TorusGrid,
) -> Vec<Vec<f64>> {
    let d = ens.dim();
    let xw = XWeights::new(ens.positions(), d, fam, grid);
    let rel: Vec<f64> = drift.iter().zip(ens.velocities()).map(|(c, v)| c - v).collect();
    deposit_x(&xw, &rel, d, grid)
}
