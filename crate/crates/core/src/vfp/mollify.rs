use num_complex::Complex64;
use rayon::prelude::*;

use super::{PhaseSpaceDensity, VfpError};
use crate::mollifier::MollifierFamily;
use crate::spectral::{fft_nd, Direction};

/// `F * theta^N` in both variables.
///
/// The x convolution is exact on the Fourier modes of each velocity slice.
/// The v convolution multiplies the spectrum of the zero-padded velocity block
/// by the analytic transform of the velocity kernel, so kernels narrower than a
/// velocity cell are still handled consistently. Mass pushed past the box walls
/// is dropped; a kernel wider than half the box is rejected.
pub fn mollify_density(f: &PhaseSpaceDensity, fam: &MollifierFamily) -> Result<PhaseSpaceDensity, VfpError> {
    let g = f.grid();
    let d = g.dim();
    if fam.dim() != d {
        return Err(VfpError::Grid(format!(
            "mollifier dimension {} differs from density dimension {d}",
            fam.dim()
        )));
    }
    if fam.v_radius() > g.v_max() {
        return Err(VfpError::Grid(format!(
            "velocity kernel radius {} exceeds the box half-width {}",
            fam.v_radius(),
            g.v_max()
        )));
    }
    let nx = g.nx();
    let nv = g.nv();
    let xres = g.x_grid().res().to_vec();
    let tables: Vec<Vec<f64>> = xres.iter().map(|&n| fam.theta1_coeff_table(n)).collect();
    let mut out = f.clone();

    out.values_mut().par_chunks_mut(nx).for_each_init(
        || vec![Complex64::default(); nx],
        |buf, row| {
            for (b, &x) in buf.iter_mut().zip(row.iter()) {
                *b = Complex64::new(x, 0.0);
            }
            fft_nd(buf, &xres, Direction::Forward);
            for (i, z) in buf.iter_mut().enumerate() {
                let idx = g.x_grid().unravel(i);
                let m: f64 = (0..d).map(|a| tables[a][idx[a]]).product();
                *z *= m;
            }
            fft_nd(buf, &xres, Direction::Inverse);
            for (x, b) in row.iter_mut().zip(buf.iter()) {
                *x = b.re;
            }
        },
    );

    let pres: Vec<usize> = g.v_res().iter().map(|n| 2 * n).collect();
    let np: usize = pres.iter().product();
    let mult: Vec<f64> = (0..np)
        .map(|flat| {
            let mut rem = flat;
            let mut s = 0.0;
            for a in (0..d).rev() {
                let n = pres[a];
                let i = rem % n;
                rem /= n;
                let m = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
                let xi = m / (n as f64 * g.v_spacing(a));
                s += xi * xi;
            }
            fam.theta2_fourier(s.sqrt())
        })
        .collect();
    let padded_index = |vf: usize| {
        let idx = g.v_unravel(vf);
        let mut p = 0;
        for a in 0..d {
            p = p * pres[a] + idx[a];
        }
        p
    };
    let map: Vec<usize> = (0..nv).map(padded_index).collect();

    let mut t = vec![0.0; nx * nv];
    super::solver::transpose(out.values(), nv, nx, &mut t);
    t.par_chunks_mut(nv).for_each_init(
        || vec![Complex64::default(); np],
        |buf, col| {
            buf.fill(Complex64::default());
            for (&p, &x) in map.iter().zip(col.iter()) {
                buf[p] = Complex64::new(x, 0.0);
            }
            fft_nd(buf, &pres, Direction::Forward);
            for (z, &m) in buf.iter_mut().zip(&mult) {
                *z *= m;
            }
            fft_nd(buf, &pres, Direction::Inverse);
            for (x, &p) in col.iter_mut().zip(&map) {
                *x = buf[p].re;
            }
        },
    );
    super::solver::transpose(&t, nx, nv, out.values_mut());
    Ok(out)
}
