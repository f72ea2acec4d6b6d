//! Multi-dimensional complex FFT on a cubic grid, built from 1-D `rustfft` plans.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

/// Forward and inverse plans for an `m^dim` row-major grid.
#[derive(Clone)]
pub struct GridFft {
    dim: usize,
    m: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for GridFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridFft")
            .field("dim", &self.dim)
            .field("m", &self.m)
            .finish()
    }
}

impl GridFft {
    pub fn new(dim: usize, m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            dim,
            m,
            forward: planner.plan_fft(m, FftDirection::Forward),
            inverse: planner.plan_fft(m, FftDirection::Inverse),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    /// Unnormalised `sum_j x_j exp(-2 pi i j k / m)` along every axis.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, &self.forward);
    }

    /// Unnormalised `sum_k x_k exp(+2 pi i j k / m)` along every axis.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, &self.inverse);
    }

    fn apply(&self, data: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let m = self.m;
        assert_eq!(data.len(), self.len());
        let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];
        // last axis is contiguous
        plan.process_with_scratch(data, &mut scratch);
        let mut line = vec![Complex64::default(); m];
        for axis in 0..self.dim - 1 {
            let stride = m.pow((self.dim - 1 - axis) as u32);
            let block = stride * m;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (i, slot) in line.iter_mut().enumerate() {
                        *slot = data[start + i * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        data[start + i * stride] = *v;
                    }
                }
            }
        }
    }
}

/// Smallest integer `>= n` whose prime factors are all in {2, 3, 5}.
pub fn smooth_size(n: usize) -> usize {
    let mut c = n.max(1);
    loop {
        let mut r = c;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return c;
        }
        c += 1;
    }
}
