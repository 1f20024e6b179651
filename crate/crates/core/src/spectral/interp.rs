use std::f64::consts::PI;

use num_complex::Complex64;

use super::{SpectralField, TorusGrid};

/// Points on the torus, stored flat (`dim` coordinates per point) and
/// always reduced into `[0,1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    pub fn new(dim: usize, mut coords: Vec<f64>) -> Self {
        assert!(dim > 0 && coords.len() % dim == 0, "coordinate count not a multiple of dim");
        for c in coords.iter_mut() {
            *c = wrap_unit(*c);
        }
        Self { dim, coords }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }
}

/// Reduces a coordinate into `[0,1)`.
#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpScheme {
    /// Direct summation of the truncated Fourier series (validation only).
    ExactFourier,
    /// Tensor-product four-point Lagrange interpolation from physical samples.
    #[default]
    Spline4,
}

/// Point evaluator for one field. Physical samples are computed once.
pub struct Interpolator<'a> {
    field: &'a SpectralField,
    samples: Option<Vec<Vec<f64>>>,
    scheme: InterpScheme,
}

impl<'a> Interpolator<'a> {
    pub fn new(field: &'a SpectralField, scheme: InterpScheme) -> Self {
        let samples = match scheme {
            InterpScheme::Spline4 => Some(field.to_samples()),
            InterpScheme::ExactFourier => None,
        };
        Self {
            field,
            samples,
            scheme,
        }
    }

    /// Values of every component at `x`, written into `out`.
    pub fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        match self.scheme {
            InterpScheme::Spline4 => {
                let samples = self.samples.as_ref().expect("samples cached");
                lagrange4(self.field.grid(), samples, x, out)
            }
            InterpScheme::ExactFourier => fourier_sum(self.field, x, out),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.field.components()];
        self.eval_into(x, &mut out);
        out
    }
}

/// Evaluates every component of `field` at each point; result is indexed
/// `[component][point]`.
pub fn evaluate_at_points(field: &SpectralField, pts: &PointSet, scheme: InterpScheme) -> Vec<Vec<f64>> {
    let interp = Interpolator::new(field, scheme);
    let mut out = vec![Vec::with_capacity(pts.len()); field.components()];
    let mut buf = vec![0.0; field.components()];
    for i in 0..pts.len() {
        interp.eval_into(pts.point(i), &mut buf);
        for (o, &b) in out.iter_mut().zip(&buf) {
            o.push(b);
        }
    }
    out
}

#[inline]
fn lagrange_weights(s: f64) -> [f64; 4] {
    [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ]
}

fn lagrange4(grid: &TorusGrid, samples: &[Vec<f64>], x: &[f64], out: &mut [f64]) {
    let d = grid.dim();
    let res = grid.res();
    let mut base = [0i64; 3];
    let mut w = [[0.0; 4]; 3];
    for a in 0..d {
        let n = res[a] as f64;
        let g = wrap_unit(x[a]) * n;
        let i0 = g.floor();
        base[a] = i0 as i64;
        w[a] = lagrange_weights(g - i0);
    }
    for o in out.iter_mut() {
        *o = 0.0;
    }
    let wrap = |i: i64, n: usize| i.rem_euclid(n as i64) as usize;
    match d {
        1 => {
            for (p, wp) in w[0].iter().enumerate() {
                let i = wrap(base[0] - 1 + p as i64, res[0]);
                for (o, s) in out.iter_mut().zip(samples) {
                    *o += wp * s[i];
                }
            }
        }
        2 => {
            for (p, wp) in w[0].iter().enumerate() {
                let i = wrap(base[0] - 1 + p as i64, res[0]);
                for (q, wq) in w[1].iter().enumerate() {
                    let j = wrap(base[1] - 1 + q as i64, res[1]);
                    let f = i * res[1] + j;
                    let ww = wp * wq;
                    for (o, s) in out.iter_mut().zip(samples) {
                        *o += ww * s[f];
                    }
                }
            }
        }
        _ => {
            for (p, wp) in w[0].iter().enumerate() {
                let i = wrap(base[0] - 1 + p as i64, res[0]);
                for (q, wq) in w[1].iter().enumerate() {
                    let j = wrap(base[1] - 1 + q as i64, res[1]);
                    for (r, wr) in w[2].iter().enumerate() {
                        let k = wrap(base[2] - 1 + r as i64, res[2]);
                        let f = (i * res[1] + j) * res[2] + k;
                        let ww = wp * wq * wr;
                        for (o, s) in out.iter_mut().zip(samples) {
                            *o += ww * s[f];
                        }
                    }
                }
            }
        }
    }
}

fn fourier_sum(field: &SpectralField, x: &[f64], out: &mut [f64]) {
    let grid = field.grid();
    let d = grid.dim();
    let phases: Vec<Vec<Complex64>> = (0..d)
        .map(|a| {
            (0..grid.res()[a])
                .map(|i| {
                    let k = grid.wavenumber(a, i) as f64;
                    Complex64::from_polar(1.0, 2.0 * PI * k * x[a])
                })
                .collect()
        })
        .collect();
    for (c, o) in out.iter_mut().enumerate() {
        let coeffs = field.coeffs(c);
        let mut acc = Complex64::default();
        for (f, z) in coeffs.iter().enumerate() {
            let idx = grid.unravel(f);
            let mut ph = phases[0][idx[0]];
            for a in 1..d {
                ph *= phases[a][idx[a]];
            }
            acc += z * ph;
        }
        *o = acc.re;
    }
}
