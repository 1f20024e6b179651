use std::f64::consts::PI;

use num_complex::Complex64;

use super::fft::{fft_nd, Direction};
use super::{SpectralError, TorusGrid};

/// Real scalar or vector field on the torus, stored as Fourier coefficients.
///
/// Coefficients follow `u(x) = sum_k u_hat(k) exp(2 i pi <k,x>)` with
/// `u_hat(k) = int u(x) exp(-2 i pi <k,x>) dx` over the unit-measure torus.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    comps: Vec<Vec<Complex64>>,
    div_free: bool,
}

impl SpectralField {
    pub fn zeros(grid: &TorusGrid, components: usize) -> Self {
        Self {
            grid: grid.clone(),
            comps: vec![vec![Complex64::default(); grid.len()]; components],
            div_free: false,
        }
    }

    /// Forward transform of a gridded scalar.
    pub fn from_samples(grid: &TorusGrid, samples: &[f64]) -> Result<Self, SpectralError> {
        Self::from_components(grid, std::slice::from_ref(&samples.to_vec()))
    }

    /// Forward transform of gridded components (one `Vec` per component).
    pub fn from_components(grid: &TorusGrid, comps: &[Vec<f64>]) -> Result<Self, SpectralError> {
        let mut out = Vec::with_capacity(comps.len());
        for c in comps {
            if c.len() != grid.len() {
                return Err(SpectralError::ShapeMismatch {
                    expected: grid.len(),
                    got: c.len(),
                });
            }
            let mut buf: Vec<Complex64> = c.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft_nd(&mut buf, grid.res(), Direction::Forward);
            out.push(buf);
        }
        Ok(Self {
            grid: grid.clone(),
            comps: out,
            div_free: false,
        })
    }

    /// Samples an analytic field `f(x, component)` on the grid and transforms it.
    pub fn from_fn(grid: &TorusGrid, components: usize, f: impl Fn(&[f64], usize) -> f64) -> Self {
        let d = grid.dim();
        let comps: Vec<Vec<f64>> = (0..components)
            .map(|c| {
                (0..grid.len())
                    .map(|i| f(&grid.point(i)[..d], c))
                    .collect()
            })
            .collect();
        Self::from_components(grid, &comps).expect("shape is consistent by construction")
    }

    /// Builds a field directly from Fourier coefficients.
    pub fn from_coeffs(grid: &TorusGrid, comps: Vec<Vec<Complex64>>) -> Result<Self, SpectralError> {
        for c in &comps {
            if c.len() != grid.len() {
                return Err(SpectralError::ShapeMismatch {
                    expected: grid.len(),
                    got: c.len(),
                });
            }
        }
        Ok(Self {
            grid: grid.clone(),
            comps,
            div_free: false,
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn components(&self) -> usize {
        self.comps.len()
    }

    pub fn coeffs(&self, component: usize) -> &[Complex64] {
        &self.comps[component]
    }

    pub fn coeffs_mut(&mut self, component: usize) -> &mut [Complex64] {
        self.div_free = false;
        &mut self.comps[component]
    }

    pub fn is_div_free(&self) -> bool {
        self.div_free
    }

    /// Coefficient of wavevector `k` (reduced into the grid's index range).
    pub fn coeff(&self, component: usize, k: &[i64]) -> Complex64 {
        let idx: Vec<usize> = k
            .iter()
            .zip(self.grid.res())
            .map(|(&kk, &n)| kk.rem_euclid(n as i64) as usize)
            .collect();
        self.comps[component][self.grid.ravel(&idx)]
    }

    /// Complex physical samples of every component.
    pub fn to_complex_samples(&self) -> Vec<Vec<Complex64>> {
        self.comps
            .iter()
            .map(|c| {
                let mut buf = c.clone();
                fft_nd(&mut buf, self.grid.res(), Direction::Inverse);
                buf
            })
            .collect()
    }

    /// Real physical samples of every component.
    pub fn to_samples(&self) -> Vec<Vec<f64>> {
        self.to_complex_samples()
            .into_iter()
            .map(|c| c.into_iter().map(|z| z.re).collect())
            .collect()
    }

    /// Largest imaginary part of the physical samples (realness monitor).
    pub fn max_imag(&self) -> f64 {
        self.to_complex_samples()
            .iter()
            .flat_map(|c| c.iter().map(|z| z.im.abs()))
            .fold(0.0, f64::max)
    }

    /// L2 norm through Parseval, summed over components.
    pub fn l2_norm(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter().map(|z| z.norm_sqr()))
            .sum::<f64>()
            .sqrt()
    }

    /// Real L2 inner product `<self, other>`.
    pub fn inner(&self, other: &Self) -> Result<f64, SpectralError> {
        self.check_compatible(other)?;
        Ok(self
            .comps
            .iter()
            .zip(&other.comps)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x * y.conj()).re))
            .sum())
    }

    pub fn check_compatible(&self, other: &Self) -> Result<(), SpectralError> {
        if self.grid != other.grid || self.components() != other.components() {
            return Err(SpectralError::GridMismatch);
        }
        Ok(())
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SpectralError> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Self) -> Result<Self, SpectralError> {
        self.zip_with(other, |a, b| a + b)
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self, SpectralError> {
        self.check_compatible(other)?;
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect())
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            comps,
            div_free: self.div_free && other.div_free,
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for c in out.comps.iter_mut() {
            for z in c.iter_mut() {
                *z *= s;
            }
        }
        out
    }

    /// Applies a real multiplier depending on `|k|^2` to every component.
    pub fn radial_multiplier(&self, m: impl Fn(f64) -> f64) -> Self {
        let k2 = self.grid.k_squared();
        let mut out = self.clone();
        for c in out.comps.iter_mut() {
            for (z, &kk) in c.iter_mut().zip(&k2) {
                *z *= m(kk);
            }
        }
        out
    }

    /// Leray projection onto divergence-free fields.
    ///
    /// Nyquist wavenumbers count as zero, matching [`Self::derivative`], so the
    /// result is discretely divergence-free and Hermitian symmetry survives.
    pub fn leray_project(&self) -> Result<Self, SpectralError> {
        let d = self.dim();
        if self.components() != d {
            return Err(SpectralError::NotAVectorField {
                components: self.components(),
                dim: d,
            });
        }
        let mut out = self.clone();
        for f in 0..self.grid.len() {
            let idx = self.grid.unravel(f);
            let mut k = self.grid.wavevector(f);
            for a in 0..d {
                if self.grid.is_nyquist(a, idx[a]) {
                    k[a] = 0;
                }
            }
            let k2: i64 = k[..d].iter().map(|c| c * c).sum();
            if k2 == 0 {
                continue;
            }
            let mut dot = Complex64::default();
            for a in 0..d {
                dot += self.comps[a][f] * k[a] as f64;
            }
            let dot = dot / k2 as f64;
            for a in 0..d {
                out.comps[a][f] = self.comps[a][f] - dot * k[a] as f64;
            }
        }
        out.div_free = true;
        Ok(out)
    }

    /// Bessel potential `(I - Delta)^{gamma/2}`, multiplier `(1+|k|^2)^{gamma/2}`.
    pub fn bessel_filter(&self, gamma: f64) -> Self {
        if gamma == 0.0 {
            return self.clone();
        }
        let mut out = self.radial_multiplier(|k2| (1.0 + k2).powf(0.5 * gamma));
        out.div_free = self.div_free;
        out
    }

    /// `||(I - Delta)^{gamma/2} f||_{L^p}` by grid quadrature; `p = inf` gives the max norm.
    pub fn bessel_norm(&self, gamma: f64, p: f64) -> f64 {
        let filtered = self.bessel_filter(gamma);
        if p == 2.0 {
            return filtered.l2_norm();
        }
        lp_norm(&filtered.to_samples(), p)
    }

    /// Heat semigroup `e^{t Delta}`, multiplier `exp(-4 pi^2 |k|^2 t)`.
    pub fn heat_propagate(&self, t: f64) -> Result<Self, SpectralError> {
        if !(t >= 0.0) {
            return Err(SpectralError::NegativeTime(t));
        }
        let c = 4.0 * PI * PI * t;
        let mut out = self.radial_multiplier(|k2| (-c * k2).exp());
        out.div_free = self.div_free;
        Ok(out)
    }

    /// Partial derivative along `axis` (multiplier `2 i pi k_axis`, Nyquist zeroed).
    pub fn derivative(&self, axis: usize) -> Self {
        let mut out = self.clone();
        out.div_free = false;
        for f in 0..self.grid.len() {
            let idx = self.grid.unravel(f);
            let factor = if self.grid.is_nyquist(axis, idx[axis]) {
                Complex64::default()
            } else {
                Complex64::new(0.0, 2.0 * PI * self.grid.wavenumber(axis, idx[axis]) as f64)
            };
            for c in out.comps.iter_mut() {
                c[f] *= factor;
            }
        }
        out
    }

    /// Divergence of a vector field, returned as a scalar field.
    pub fn divergence(&self) -> Result<Self, SpectralError> {
        let d = self.dim();
        if self.components() != d {
            return Err(SpectralError::NotAVectorField {
                components: self.components(),
                dim: d,
            });
        }
        let mut acc = vec![Complex64::default(); self.grid.len()];
        for a in 0..d {
            let da = self.component(a).derivative(a);
            for (s, z) in acc.iter_mut().zip(&da.comps[0]) {
                *s += z;
            }
        }
        Self::from_coeffs(&self.grid, vec![acc])
    }

    /// Gradient of a scalar field.
    pub fn gradient(&self) -> Result<Self, SpectralError> {
        if self.components() != 1 {
            return Err(SpectralError::NotAScalarField(self.components()));
        }
        let comps = (0..self.dim())
            .map(|a| self.derivative(a).comps.remove(0))
            .collect();
        Self::from_coeffs(&self.grid, comps)
    }

    /// Single component as a scalar field.
    pub fn component(&self, c: usize) -> Self {
        Self {
            grid: self.grid.clone(),
            comps: vec![self.comps[c].clone()],
            div_free: false,
        }
    }

    /// Zeroes modes outside the 2/3 band.
    pub fn dealias(&self, mask: &[bool]) -> Self {
        let mut out = self.clone();
        for c in out.comps.iter_mut() {
            for (z, &keep) in c.iter_mut().zip(mask) {
                if !keep {
                    *z = Complex64::default();
                }
            }
        }
        out
    }

    /// Largest `|<k, u_hat(k)>|` over all modes (Nyquist wavenumbers count as zero).
    pub fn divergence_residual(&self) -> f64 {
        let d = self.dim();
        if self.components() != d {
            return f64::NAN;
        }
        (0..self.grid.len())
            .map(|f| {
                let idx = self.grid.unravel(f);
                let mut k = self.grid.wavevector(f);
                for a in 0..d {
                    if self.grid.is_nyquist(a, idx[a]) {
                        k[a] = 0;
                    }
                }
                let mut dot = Complex64::default();
                for a in 0..d {
                    dot += self.comps[a][f] * k[a] as f64;
                }
                dot.norm()
            })
            .fold(0.0, f64::max)
    }
}

/// L^p norm of gridded components on the unit torus (pointwise Euclidean norm
/// across components). `p = inf` returns the maximum.
pub fn lp_norm(comps: &[Vec<f64>], p: f64) -> f64 {
    let n = comps.first().map_or(0, |c| c.len());
    if n == 0 {
        return 0.0;
    }
    let point = |i: usize| -> f64 {
        if comps.len() == 1 {
            comps[0][i].abs()
        } else {
            comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt()
        }
    };
    if p.is_infinite() {
        return (0..n).map(point).fold(0.0, f64::max);
    }
    let s: f64 = (0..n).map(|i| point(i).powf(p)).sum();
    (s / n as f64).powf(1.0 / p)
}
