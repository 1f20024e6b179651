use std::io;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use super::VfpError;
use crate::binio::{put_f64, put_u32, read_all, write_atomic, Reader};
use crate::spectral::TorusGrid;

/// Cell-centred grid on `T^d x [-V_max, V_max]^d`.
///
/// Values are stored velocity-major: `index = v_flat * nx + x_flat`, where both
/// flat indices are row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    x: TorusGrid,
    v_res: Arc<Vec<usize>>,
    v_max: f64,
}

impl PhaseGrid {
    pub fn new(x: TorusGrid, v_res: &[usize], v_max: f64) -> Result<Self, VfpError> {
        if v_res.len() != x.dim() {
            return Err(VfpError::Grid(format!(
                "velocity grid has {} axes, spatial grid has {}",
                v_res.len(),
                x.dim()
            )));
        }
        if v_res.iter().any(|&n| n < 2) {
            return Err(VfpError::Grid("velocity resolution must be at least 2".into()));
        }
        if !(v_max > 0.0 && v_max.is_finite()) {
            return Err(VfpError::Grid(format!("V_max must be positive, got {v_max}")));
        }
        Ok(Self {
            x,
            v_res: Arc::new(v_res.to_vec()),
            v_max,
        })
    }

    pub fn x_grid(&self) -> &TorusGrid {
        &self.x
    }

    pub fn dim(&self) -> usize {
        self.x.dim()
    }

    pub fn v_res(&self) -> &[usize] {
        &self.v_res
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn nv(&self) -> usize {
        self.v_res.iter().product()
    }

    pub fn len(&self) -> usize {
        self.nx() * self.nv()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn v_spacing(&self, axis: usize) -> f64 {
        2.0 * self.v_max / self.v_res[axis] as f64
    }

    pub fn v_center(&self, axis: usize, i: usize) -> f64 {
        -self.v_max + (i as f64 + 0.5) * self.v_spacing(axis)
    }

    pub fn v_unravel(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for a in (0..self.dim()).rev() {
            idx[a] = flat % self.v_res[a];
            flat /= self.v_res[a];
        }
        idx
    }

    pub fn v_ravel(&self, idx: &[usize]) -> usize {
        let mut f = 0;
        for a in 0..self.dim() {
            f = f * self.v_res[a] + idx[a];
        }
        f
    }

    pub fn v_point(&self, flat: usize) -> [f64; 3] {
        let idx = self.v_unravel(flat);
        let mut p = [0.0; 3];
        for a in 0..self.dim() {
            p[a] = self.v_center(a, idx[a]);
        }
        p
    }

    pub fn v_cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.v_spacing(a)).product()
    }

    pub fn cell_volume(&self) -> f64 {
        self.x.cell_volume() * self.v_cell_volume()
    }

    /// `<v>^{2k}` for every velocity cell.
    pub fn bracket_pow(&self, two_k: f64) -> Vec<f64> {
        (0..self.nv())
            .map(|f| {
                let p = self.v_point(f);
                let s: f64 = p[..self.dim()].iter().map(|c| c * c).sum();
                (1.0 + s).powf(0.5 * two_k)
            })
            .collect()
    }

    /// Whether a velocity cell touches the box boundary.
    pub fn is_boundary_v(&self, flat: usize) -> bool {
        let idx = self.v_unravel(flat);
        (0..self.dim()).any(|a| idx[a] == 0 || idx[a] + 1 == self.v_res[a])
    }
}

/// Nonnegative phase-space density sampled at cell centres.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceDensity {
    grid: PhaseGrid,
    values: Vec<f64>,
    pub t: f64,
}

/// Velocity moments of a density.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    /// `m_0(x)` on the spatial grid.
    pub m0: Vec<f64>,
    /// `int v F dv` per component.
    pub m1: Vec<Vec<f64>>,
    /// `M_k = int <v>^k F dx dv` for `k = 0..=k_max`.
    pub big_m: Vec<f64>,
}

impl PhaseSpaceDensity {
    pub fn zeros(grid: &PhaseGrid) -> Self {
        Self {
            values: vec![0.0; grid.len()],
            grid: grid.clone(),
            t: 0.0,
        }
    }

    pub fn from_values(grid: &PhaseGrid, values: Vec<f64>) -> Result<Self, VfpError> {
        if values.len() != grid.len() {
            return Err(VfpError::Grid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
            t: 0.0,
        })
    }

    /// Samples `f(x, v)` at cell centres.
    pub fn from_fn(grid: &PhaseGrid, f: impl Fn(&[f64], &[f64]) -> f64 + Sync) -> Self {
        let d = grid.dim();
        let nx = grid.nx();
        let mut values = vec![0.0; grid.len()];
        values.par_chunks_mut(nx).enumerate().for_each(|(vf, row)| {
            let v = grid.v_point(vf);
            for (xf, out) in row.iter_mut().enumerate() {
                let x = grid.x_grid().point(xf);
                *out = f(&x[..d], &v[..d]);
            }
        });
        Self {
            grid: grid.clone(),
            values,
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Rescales to unit mass.
    pub fn normalize(&mut self) -> Result<(), VfpError> {
        let m = self.mass();
        if !(m > 0.0 && m.is_finite()) {
            return Err(VfpError::Grid(format!("density is not normalizable (mass {m})")));
        }
        for v in &mut self.values {
            *v /= m;
        }
        Ok(())
    }

    /// `||<v>^k F||_{L^2(x, v)}`.
    pub fn weighted_l2_norm(&self, k: f64) -> f64 {
        weighted_l2(&self.grid, &self.values, k)
    }

    /// `||<v>^k (F - G)||_{L^2}`.
    pub fn weighted_l2_distance(&self, other: &Self, k: f64) -> Result<f64, VfpError> {
        self.check_same_grid(other)?;
        let nx = self.grid.nx();
        let w = self.grid.bracket_pow(2.0 * k);
        let s: f64 = self
            .values
            .par_chunks(nx)
            .zip(other.values.par_chunks(nx))
            .enumerate()
            .map(|(vf, (a, b))| w[vf] * a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>())
            .collect::<Vec<f64>>()
            .iter()
            .sum();
        Ok((s * self.grid.cell_volume()).sqrt())
    }

    pub fn l1_distance(&self, other: &Self) -> Result<f64, VfpError> {
        self.check_same_grid(other)?;
        let s: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).sum();
        Ok(s * self.grid.cell_volume())
    }

    pub fn check_same_grid(&self, other: &Self) -> Result<(), VfpError> {
        if self.grid != other.grid {
            return Err(VfpError::Grid("densities live on different phase grids".into()));
        }
        Ok(())
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Share of the mass sitting in velocity cells adjacent to the box boundary.
    pub fn boundary_mass_fraction(&self) -> f64 {
        let nx = self.grid.nx();
        let total: f64 = self.values.iter().map(|v| v.abs()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let edge: f64 = self
            .values
            .chunks(nx)
            .enumerate()
            .filter(|(vf, _)| self.grid.is_boundary_v(*vf))
            .map(|(_, row)| row.iter().map(|v| v.abs()).sum::<f64>())
            .sum();
        edge / total
    }

    /// `m_0`, vector `m_1` and the scalar table `M_0..=M_{k_max}`.
    pub fn moments(&self, k_max: usize) -> Moments {
        let d = self.grid.dim();
        let nx = self.grid.nx();
        let hv = self.grid.v_cell_volume();
        let mut m0 = vec![0.0; nx];
        let mut m1 = vec![vec![0.0; nx]; d];
        let mut big_m = vec![0.0; k_max + 1];
        for (vf, row) in self.values.chunks(nx).enumerate() {
            let v = self.grid.v_point(vf);
            let br = (1.0 + v[..d].iter().map(|c| c * c).sum::<f64>()).sqrt();
            let row_sum: f64 = row.iter().sum();
            for (j, &f) in row.iter().enumerate() {
                m0[j] += f * hv;
                for a in 0..d {
                    m1[a][j] += v[a] * f * hv;
                }
            }
            let mut p = 1.0;
            for m in big_m.iter_mut() {
                *m += p * row_sum;
                p *= br;
            }
        }
        let cv = self.grid.cell_volume();
        for m in &mut big_m {
            *m *= cv;
        }
        Moments { m0, m1, big_m }
    }

    /// `int F dv` on the spatial grid.
    pub fn x_marginal(&self) -> Vec<f64> {
        self.moments(0).m0
    }

    pub fn axpy(&mut self, a: f64, other: &Self) -> Result<(), VfpError> {
        self.check_same_grid(other)?;
        for (p, q) in self.values.iter_mut().zip(&other.values) {
            *p += a * q;
        }
        Ok(())
    }
}

pub(crate) fn weighted_l2(grid: &PhaseGrid, values: &[f64], k: f64) -> f64 {
    let nx = grid.nx();
    let w = grid.bracket_pow(2.0 * k);
    let s: f64 = values
        .chunks(nx)
        .enumerate()
        .map(|(vf, row)| w[vf] * row.iter().map(|x| x * x).sum::<f64>())
        .sum();
    (s * grid.cell_volume()).sqrt()
}

pub const PHASE_MAGIC: &[u8; 4] = b"KPHD";
const PHASE_VERSION: u32 = 1;

/// `KPHD` snapshot: magic, version u32, dim u32, x resolution u32 x d,
/// v resolution u32 x d, V_max f64, t f64, then the values (f64) in storage order.
pub fn encode_density(f: &PhaseSpaceDensity) -> Vec<u8> {
    let g = f.grid();
    let mut buf = Vec::with_capacity(64 + 8 * g.len());
    buf.extend_from_slice(PHASE_MAGIC);
    put_u32(&mut buf, PHASE_VERSION);
    put_u32(&mut buf, g.dim() as u32);
    for &n in g.x_grid().res() {
        put_u32(&mut buf, n as u32);
    }
    for &n in g.v_res() {
        put_u32(&mut buf, n as u32);
    }
    put_f64(&mut buf, g.v_max());
    put_f64(&mut buf, f.t);
    for &v in f.values() {
        put_f64(&mut buf, v);
    }
    buf
}

pub fn decode_density(bytes: &[u8]) -> io::Result<PhaseSpaceDensity> {
    let bad = |m: String| io::Error::new(io::ErrorKind::InvalidData, m);
    let mut r = Reader::new(bytes);
    r.magic(PHASE_MAGIC)?;
    let version = r.u32()?;
    if version != PHASE_VERSION {
        return Err(bad(format!("unsupported KPHD version {version}")));
    }
    let d = r.u32()? as usize;
    let xres: Vec<usize> = (0..d).map(|_| r.u32().map(|n| n as usize)).collect::<io::Result<_>>()?;
    let vres: Vec<usize> = (0..d).map(|_| r.u32().map(|n| n as usize)).collect::<io::Result<_>>()?;
    let v_max = r.f64()?;
    let t = r.f64()?;
    let x = TorusGrid::new(&xres).map_err(|e| bad(e.to_string()))?;
    let grid = PhaseGrid::new(x, &vres, v_max).map_err(|e| bad(e.to_string()))?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        values.push(r.f64()?);
    }
    r.finish()?;
    let mut f = PhaseSpaceDensity::from_values(&grid, values).map_err(|e| bad(e.to_string()))?;
    f.t = t;
    Ok(f)
}

pub fn write_density(path: &Path, f: &PhaseSpaceDensity) -> io::Result<()> {
    write_atomic(path, &encode_density(f))
}

pub fn read_density(path: &Path) -> io::Result<PhaseSpaceDensity> {
    decode_density(&read_all(path)?)
}
