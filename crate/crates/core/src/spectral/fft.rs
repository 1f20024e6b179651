//! Multi-dimensional complex FFT over row-major buffers.
//!
//! Forward transforms are normalized by the number of samples so the output
//! holds Fourier coefficients of the unit-measure torus; inverse transforms
//! are unnormalized synthesis.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
    static SCRATCH: RefCell<(Vec<Complex64>, Vec<Complex64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Transforms `data` (row-major, shape `shape`) in place along every axis.
pub fn fft_nd(data: &mut [Complex64], shape: &[usize], dir: Direction) {
    let total: usize = shape.iter().product();
    assert_eq!(data.len(), total, "buffer does not match shape");
    for axis in 0..shape.len() {
        fft_axis(data, shape, axis, dir);
    }
    if dir == Direction::Forward {
        let scale = 1.0 / total as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }
}

/// Unnormalized transform along one axis.
pub fn fft_axis(data: &mut [Complex64], shape: &[usize], axis: usize, dir: Direction) {
    let n = shape[axis];
    if n <= 1 {
        return;
    }
    let stride: usize = shape[axis + 1..].iter().product();
    let plan = PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        match dir {
            Direction::Forward => p.plan_fft_forward(n),
            Direction::Inverse => p.plan_fft_inverse(n),
        }
    });
    SCRATCH.with(|s| {
        let mut s = s.borrow_mut();
        let (lines, scratch) = &mut *s;
        let scratch_len = plan.get_inplace_scratch_len();
        if scratch.len() < scratch_len {
            scratch.resize(scratch_len, Complex64::default());
        }
        if stride == 1 {
            plan.process_with_scratch(data, &mut scratch[..scratch_len]);
            return;
        }
        let block = n * stride;
        if lines.len() < block {
            lines.resize(block, Complex64::default());
        }
        for chunk in data.chunks_mut(block) {
            // transpose n x stride -> stride x n
            for i in 0..n {
                let row = &chunk[i * stride..(i + 1) * stride];
                for (j, &c) in row.iter().enumerate() {
                    lines[j * n + i] = c;
                }
            }
            plan.process_with_scratch(&mut lines[..block], &mut scratch[..scratch_len]);
            for i in 0..n {
                let row = &mut chunk[i * stride..(i + 1) * stride];
                for (j, c) in row.iter_mut().enumerate() {
                    *c = lines[j * n + i];
                }
            }
        }
    });
}
