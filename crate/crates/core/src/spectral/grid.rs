use std::sync::Arc;

use super::SpectralError;

/// Uniform periodic grid on the unit torus `[0,1)^d`.
///
/// Sample `j` along an axis of size `n` sits at `j / n`; the matching
/// Fourier index `j` represents wavenumber `j` for `j < n/2` and `j - n`
/// otherwise (the Nyquist index maps to `-n/2`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TorusGrid {
    res: Arc<Vec<usize>>,
}

impl TorusGrid {
    pub fn new(res: &[usize]) -> Result<Self, SpectralError> {
        if res.is_empty() || res.len() > 3 {
            return Err(SpectralError::UnsupportedDimension(res.len()));
        }
        if let Some(&n) = res.iter().find(|&&n| n < 2 || n % 2 != 0) {
            return Err(SpectralError::OddResolution(n));
        }
        Ok(Self {
            res: Arc::new(res.to_vec()),
        })
    }

    /// Square/cubic grid with `n` points per axis.
    pub fn cubic(dim: usize, n: usize) -> Result<Self, SpectralError> {
        Self::new(&vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.res.len()
    }

    pub fn res(&self) -> &[usize] {
        &self.res
    }

    pub fn len(&self) -> usize {
        self.res.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of one cell (quadrature weight).
    pub fn cell_volume(&self) -> f64 {
        1.0 / self.len() as f64
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        1.0 / self.res[axis] as f64
    }

    pub fn wavenumber(&self, axis: usize, index: usize) -> i64 {
        let n = self.res[axis];
        if index < n / 2 {
            index as i64
        } else {
            index as i64 - n as i64
        }
    }

    /// Multi-index of a flat row-major position.
    pub fn unravel(&self, mut flat: usize) -> [usize; 3] {
        let mut idx = [0usize; 3];
        for axis in (0..self.dim()).rev() {
            let n = self.res[axis];
            idx[axis] = flat % n;
            flat /= n;
        }
        idx
    }

    pub fn ravel(&self, idx: &[usize]) -> usize {
        let mut flat = 0;
        for (axis, &i) in idx.iter().enumerate().take(self.dim()) {
            flat = flat * self.res[axis] + i;
        }
        flat
    }

    /// Integer wavevector at a flat Fourier index.
    pub fn wavevector(&self, flat: usize) -> [i64; 3] {
        let idx = self.unravel(flat);
        let mut k = [0i64; 3];
        for axis in 0..self.dim() {
            k[axis] = self.wavenumber(axis, idx[axis]);
        }
        k
    }

    /// `|k|^2` for every flat Fourier index.
    pub fn k_squared(&self) -> Vec<f64> {
        (0..self.len())
            .map(|f| {
                let k = self.wavevector(f);
                k.iter().map(|&c| (c * c) as f64).sum()
            })
            .collect()
    }

    /// True when the index holds a Nyquist wavenumber along `axis`.
    pub fn is_nyquist(&self, axis: usize, index: usize) -> bool {
        index == self.res[axis] / 2
    }

    /// Physical coordinates of a flat sample index.
    pub fn point(&self, flat: usize) -> [f64; 3] {
        let idx = self.unravel(flat);
        let mut x = [0.0; 3];
        for axis in 0..self.dim() {
            x[axis] = idx[axis] as f64 / self.res[axis] as f64;
        }
        x
    }

    /// Largest integer wavenumber magnitude representable along any axis.
    pub fn max_wavenumber(&self) -> usize {
        self.res.iter().map(|n| n / 2).max().unwrap_or(0)
    }

    /// Mask of modes kept by the 2/3 dealiasing rule.
    pub fn dealias_mask(&self) -> Vec<bool> {
        (0..self.len())
            .map(|f| {
                let k = self.wavevector(f);
                (0..self.dim()).all(|a| 3 * k[a].unsigned_abs() as usize <= self.res[a])
                    && (0..self.dim()).all(|a| !self.is_nyquist(a, self.unravel(f)[a]))
            })
            .collect()
    }
}
