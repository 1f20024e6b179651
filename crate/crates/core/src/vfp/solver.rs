use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{PhaseGrid, PhaseSpaceDensity, VfpError};
use crate::fluid::{limit_fluid_forcing, LimitMode, NsSolver};
use crate::mollifier::CutoffSpec;
use crate::spectral::{fft_nd, Direction, SpectralField};

/// Boundary-cell mass share above which the velocity box is flagged as too small.
pub const BOUNDARY_MASS_LIMIT: f64 = 1e-6;

/// Health report of one kinetic step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepReport {
    pub mass: f64,
    /// Mass of the negative undershoots removed by the positivity fix.
    pub clipped: f64,
    pub boundary_fraction: f64,
    pub min_value: f64,
    pub max_value: f64,
}

impl StepReport {
    pub fn of(f: &PhaseSpaceDensity) -> Self {
        Self {
            mass: f.mass(),
            clipped: 0.0,
            boundary_fraction: f.boundary_mass_fraction(),
            min_value: f.min_value(),
            max_value: f.max_value(),
        }
    }

    /// The velocity box is too small for the current density.
    pub fn boundary_flagged(&self) -> bool {
        self.boundary_fraction > BOUNDARY_MASS_LIMIT
    }
}

/// Strang-split solver for `dF/dt + v.grad_x F + div_v((U - v) F) = (sigma^2/2) Lap_v F`
/// with `U(x)` frozen over a step.
///
/// Substeps: velocity half step, exact spectral x-transport, velocity half step.
/// For `sigma > 0` the velocity step is a Scharfetter-Gummel (Chang-Cooper) flux
/// discretization with Crank-Nicolson in time, axis by axis, zero flux at the box
/// walls; its discrete steady state is the sampled Maxwellian `exp(-|v-U|^2/sigma^2)`.
/// For `sigma = 0` it is the exact characteristic flow remapped conservatively through
/// the cumulative mass function.
#[derive(Debug, Clone)]
pub struct VfpSolver {
    grid: PhaseGrid,
}

fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-10 {
        1.0 - 0.5 * z
    } else {
        z / z.exp_m1()
    }
}

/// Transposes `src` (rows x cols) into `dst` (cols x rows), parallel over output rows.
pub(crate) fn transpose(src: &[f64], rows: usize, cols: usize, dst: &mut [f64]) {
    const B: usize = 32;
    dst.par_chunks_mut(rows * B).enumerate().for_each(|(cb, chunk)| {
        let c0 = cb * B;
        let nc = chunk.len() / rows;
        for r0 in (0..rows).step_by(B) {
            for r in r0..(r0 + B).min(rows) {
                let row = &src[r * cols + c0..r * cols + c0 + nc];
                for (c, &v) in row.iter().enumerate() {
                    chunk[c * rows + r] = v;
                }
            }
        }
    });
}

/// Tridiagonal system `a_i x_{i-1} + b_i x_i + c_i x_{i+1} = r_i`, factorized once.
struct Thomas {
    a: Vec<f64>,
    inv: Vec<f64>,
    cp: Vec<f64>,
}

impl Thomas {
    fn new(a: &[f64], b: &[f64], c: &[f64]) -> Self {
        let n = b.len();
        let mut inv = vec![0.0; n];
        let mut cp = vec![0.0; n];
        let mut denom = b[0];
        inv[0] = 1.0 / denom;
        cp[0] = c[0] * inv[0];
        for i in 1..n {
            denom = b[i] - a[i] * cp[i - 1];
            inv[i] = 1.0 / denom;
            cp[i] = c[i] * inv[i];
        }
        Self {
            a: a.to_vec(),
            inv,
            cp,
        }
    }

    fn solve(&self, r: &mut [f64]) {
        let n = r.len();
        r[0] *= self.inv[0];
        for i in 1..n {
            r[i] = (r[i] - self.a[i] * r[i - 1]) * self.inv[i];
        }
        for i in (0..n - 1).rev() {
            r[i] -= self.cp[i] * r[i + 1];
        }
    }
}

/// Operator pieces for one velocity axis at one spatial cell.
enum AxisOp {
    Diffusive {
        lo: Vec<f64>,
        di: Vec<f64>,
        up: Vec<f64>,
        fact: Thomas,
        half_tau: f64,
    },
    Remap {
        pre: Vec<f64>,
    },
}

impl VfpSolver {
    pub fn new(grid: &PhaseGrid) -> Self {
        Self { grid: grid.clone() }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    /// Exact free transport `dF/dt + v.grad_x F = 0` over `dt`, by a Fourier shift per velocity cell.
    pub fn x_transport(&self, f: &mut PhaseSpaceDensity, dt: f64) {
        let g = &self.grid;
        let d = g.dim();
        let xres = g.x_grid().res().to_vec();
        let nx = g.nx();
        f.values_mut().par_chunks_mut(nx).enumerate().for_each_init(
            || vec![Complex64::default(); nx],
            |buf, (vf, row)| {
                let v = g.v_point(vf);
                for (b, &x) in buf.iter_mut().zip(row.iter()) {
                    *b = Complex64::new(x, 0.0);
                }
                fft_nd(buf, &xres, Direction::Forward);
                let tables: Vec<Vec<Complex64>> = (0..d)
                    .map(|a| {
                        (0..xres[a])
                            .map(|i| {
                                let k = g.x_grid().wavenumber(a, i) as f64;
                                Complex64::from_polar(1.0, -2.0 * PI * k * v[a] * dt)
                            })
                            .collect()
                    })
                    .collect();
                for (i, z) in buf.iter_mut().enumerate() {
                    let idx = g.x_grid().unravel(i);
                    let mut ph = tables[0][idx[0]];
                    for a in 1..d {
                        ph *= tables[a][idx[a]];
                    }
                    *z *= ph;
                }
                fft_nd(buf, &xres, Direction::Inverse);
                for (x, b) in row.iter_mut().zip(buf.iter()) {
                    *x = b.re;
                }
            },
        );
    }

    fn axis_op(&self, axis: usize, u: f64, sigma: f64, tau: f64) -> AxisOp {
        let g = &self.grid;
        let n = g.v_res()[axis];
        let h = g.v_spacing(axis);
        if sigma > 0.0 {
            let diff = 0.5 * sigma * sigma;
            let s = diff / (h * h);
            // delta at the interior edges i+1/2, i = 0..n-2
            let delta: Vec<f64> = (0..n - 1)
                .map(|i| h * (-g.v_max() + (i + 1) as f64 * h - u) / diff)
                .collect();
            let mut lo = vec![0.0; n];
            let mut di = vec![0.0; n];
            let mut up = vec![0.0; n];
            for i in 0..n {
                if i > 0 {
                    lo[i] = s * bernoulli(delta[i - 1]);
                    di[i] -= s * bernoulli(-delta[i - 1]);
                }
                if i + 1 < n {
                    up[i] = s * bernoulli(-delta[i]);
                    di[i] -= s * bernoulli(delta[i]);
                }
            }
            let half_tau = 0.5 * tau;
            let a: Vec<f64> = lo.iter().map(|x| -half_tau * x).collect();
            let b: Vec<f64> = di.iter().map(|x| 1.0 - half_tau * x).collect();
            let c: Vec<f64> = up.iter().map(|x| -half_tau * x).collect();
            let fact = Thomas::new(&a, &b, &c);
            AxisOp::Diffusive {
                lo,
                di,
                up,
                fact,
                half_tau,
            }
        } else {
            let grow = tau.exp();
            let pre = (0..=n)
                .map(|i| {
                    let edge = -g.v_max() + i as f64 * h;
                    u + (edge - u) * grow
                })
                .collect();
            AxisOp::Remap { pre }
        }
    }

    fn apply_axis_line(&self, op: &AxisOp, line: &mut [f64], work: &mut Vec<f64>, h: f64, v0: f64) {
        let n = line.len();
        match op {
            AxisOp::Diffusive {
                lo,
                di,
                up,
                fact,
                half_tau,
            } => {
                work.clear();
                for i in 0..n {
                    let mut lf = di[i] * line[i];
                    if i > 0 {
                        lf += lo[i] * line[i - 1];
                    }
                    if i + 1 < n {
                        lf += up[i] * line[i + 1];
                    }
                    work.push(line[i] + half_tau * lf);
                }
                fact.solve(work);
                line.copy_from_slice(work);
            }
            AxisOp::Remap { pre } => remap_line(line, pre, h, v0, work),
        }
    }

    /// Velocity substep over `tau` with drift field `U` (one `Vec` per component on the x grid).
    pub fn v_step(&self, f: &mut PhaseSpaceDensity, u: &[Vec<f64>], sigma: f64, tau: f64, reverse_axes: bool) {
        let g = &self.grid;
        let d = g.dim();
        let nx = g.nx();
        let nv = g.nv();
        let vres = g.v_res().to_vec();
        let mut t = vec![0.0; nx * nv];
        transpose(f.values(), nv, nx, &mut t);
        t.par_chunks_mut(nv).enumerate().for_each_init(
            || (Vec::new(), Vec::new()),
            |(line, work), (xf, col)| {
                let axes: Vec<usize> = if reverse_axes { (0..d).rev().collect() } else { (0..d).collect() };
                for a in axes {
                    let op = self.axis_op(a, u[a][xf], sigma, tau);
                    let n = vres[a];
                    let stride: usize = vres[a + 1..].iter().product();
                    let outer = nv / (n * stride);
                    let h = g.v_spacing(a);
                    for o in 0..outer {
                        for s in 0..stride {
                            let base = o * n * stride + s;
                            line.clear();
                            line.extend((0..n).map(|i| col[base + i * stride]));
                            self.apply_axis_line(&op, line, work, h, -g.v_max());
                            for i in 0..n {
                                col[base + i * stride] = line[i];
                            }
                        }
                    }
                }
            },
        );
        transpose(&t, nx, nv, f.values_mut());
    }

    /// One Strang step `v(dt/2) x(dt) v(dt/2)` with `U` frozen.
    pub fn step(&self, f: &mut PhaseSpaceDensity, u: &[Vec<f64>], sigma: f64, dt: f64) -> StepReport {
        self.v_step(f, u, sigma, 0.5 * dt, false);
        self.x_transport(f, dt);
        self.v_step(f, u, sigma, 0.5 * dt, true);
        f.t += dt;
        let clipped = clip_negative(f.values_mut());
        StepReport {
            clipped: clipped * self.grid.cell_volume(),
            ..StepReport::of(f)
        }
    }
}

/// Zeroes negative undershoots and rescales the positive part so the sum is unchanged.
/// Returns the removed negative sum.
fn clip_negative(values: &mut [f64]) -> f64 {
    let neg: f64 = values.iter().filter(|x| **x < 0.0).map(|x| -x).sum();
    if neg == 0.0 {
        return 0.0;
    }
    let pos: f64 = values.iter().filter(|x| **x > 0.0).sum();
    let scale = (pos - neg) / pos;
    values.par_iter_mut().for_each(|x| *x = if *x < 0.0 { 0.0 } else { *x * scale });
    neg
}

/// Conservative remap of one line of cell averages through the backward characteristic
/// map: the new cumulative mass at edge `i` is the old cumulative mass at `pre[i]`.
fn remap_line(line: &mut [f64], pre: &[f64], h: f64, v0: f64, work: &mut Vec<f64>) {
    let n = line.len();
    // cumulative masses at the edges
    work.clear();
    work.push(0.0);
    let mut acc = 0.0;
    for &x in line.iter() {
        acc += x * h;
        work.push(acc);
    }
    let total = acc;
    // monotone (harmonic-mean) slopes of the cumulative at the edges
    let slope = |j: usize| -> f64 {
        if j == 0 {
            line[0]
        } else if j == n {
            line[n - 1]
        } else {
            let (a, b) = (line[j - 1], line[j]);
            if a * b <= 0.0 {
                0.0
            } else {
                2.0 * a * b / (a + b)
            }
        }
    };
    let cum = |p: f64| -> f64 {
        let s = (p - v0) / h;
        if s <= 0.0 {
            return 0.0;
        }
        if s >= n as f64 {
            return total;
        }
        let j = (s.floor() as usize).min(n - 1);
        let t = s - j as f64;
        let (c0, c1) = (work[j], work[j + 1]);
        let (m0, m1) = (slope(j) * h, slope(j + 1) * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * c0 + (t3 - 2.0 * t2 + t) * m0 + (-2.0 * t3 + 3.0 * t2) * c1 + (t3 - t2) * m1
    };
    let mut prev = cum(pre[0]);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let next = cum(pre[i + 1]);
        out.push((next - prev) / h);
        prev = next;
    }
    line.copy_from_slice(&out);
}

/// Samples of the transport velocity `U = u` or `cutoff(u)` on the x grid.
pub fn transport_velocity(u: &SpectralField, cutoff: &CutoffSpec, mode: LimitMode) -> Vec<Vec<f64>> {
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
    us
}

/// One kinetic step against the fluid field `u`.
pub fn vfp_step(
    solver: &VfpSolver,
    f: &PhaseSpaceDensity,
    u: &SpectralField,
    sigma: f64,
    dt: f64,
    cutoff: &CutoffSpec,
    mode: LimitMode,
) -> Result<(PhaseSpaceDensity, StepReport), VfpError> {
    if f.grid() != solver.grid() || u.grid() != solver.grid().x_grid() {
        return Err(VfpError::Grid("density, field and solver grids differ".into()));
    }
    if !(sigma >= 0.0) {
        return Err(VfpError::Grid(format!("sigma must be nonnegative, got {sigma}")));
    }
    let us = transport_velocity(u, cutoff, mode);
    let mut out = f.clone();
    let rep = solver.step(&mut out, &us, sigma, dt);
    Ok((out, rep))
}

/// One step of the limit system: drag forcing and transport velocity are taken
/// from the start-of-step state, then fluid and density advance.
pub fn limit_coupled_step(
    ns: &NsSolver,
    solver: &VfpSolver,
    u: &SpectralField,
    f: &PhaseSpaceDensity,
    sigma: f64,
    dt: f64,
    mode: LimitMode,
) -> Result<(SpectralField, PhaseSpaceDensity, StepReport), VfpError> {
    let force = limit_fluid_forcing(u, f, ns.cutoff(), mode)?;
    let (next_f, rep) = vfp_step(solver, f, u, sigma, dt, ns.cutoff(), mode)?;
    let next_u = ns.step(u, Some(&force), dt)?;
    Ok((next_u, next_f, rep))
}
