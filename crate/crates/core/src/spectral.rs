//! Multi-axis FFT helpers over dense row-major arrays.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

/// Forward and inverse plans for one axis length.
#[derive(Clone)]
pub struct AxisPlan<T: Real> {
    n: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
}

impl<T: Real> std::fmt::Debug for AxisPlan<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AxisPlan").field("n", &self.n).finish()
    }
}

impl<T: Real> AxisPlan<T> {
    pub fn new(planner: &mut FftPlanner<T>, n: usize) -> Self {
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized forward transform of one contiguous line (or several
    /// back-to-back lines).
    pub fn forward_lines(&self, buf: &mut [Complex<T>]) {
        self.forward.process(buf);
    }

    /// Normalized inverse transform of contiguous lines.
    pub fn inverse_lines(&self, buf: &mut [Complex<T>]) {
        self.inverse.process(buf);
        let scale = T::one() / T::of(self.n);
        buf.iter_mut().for_each(|c| *c = *c * scale);
    }
}

/// Applies `plan` along `axis` of a row-major array with the given shape.
/// Inverse transforms are normalized by `1/n`.
pub fn transform_axis<T: Real>(
    buf: &mut [Complex<T>],
    shape: &[usize],
    axis: usize,
    plan: &AxisPlan<T>,
    inverse: bool,
) {
    let n = shape[axis];
    debug_assert_eq!(n, plan.len());
    let stride: usize = shape[axis + 1..].iter().product();
    if stride == 1 {
        if inverse {
            plan.inverse_lines(buf);
        } else {
            plan.forward_lines(buf);
        }
        return;
    }
    let block = n * stride;
    let mut line = vec![Complex::new(T::zero(), T::zero()); n];
    for outer in buf.chunks_mut(block) {
        for inner in 0..stride {
            for (k, c) in line.iter_mut().enumerate() {
                *c = outer[inner + k * stride];
            }
            if inverse {
                plan.inverse_lines(&mut line);
            } else {
                plan.forward_lines(&mut line);
            }
            for (k, c) in line.iter().enumerate() {
                outer[inner + k * stride] = *c;
            }
        }
    }
}

/// Signed frequency index of FFT bin `m` for length `n`: `0, 1, …, n/2-1, -n/2, …, -1`.
#[inline]
pub fn signed_index(m: usize, n: usize) -> isize {
    if m < n / 2 {
        m as isize
    } else {
        m as isize - n as isize
    }
}

/// `true` for the unpaired Nyquist bin of an even-length transform.
#[inline]
pub fn is_nyquist(m: usize, n: usize) -> bool {
    n % 2 == 0 && m == n / 2
}

pub fn to_complex<T: Real>(values: &[T]) -> Vec<Complex<T>> {
    values.iter().map(|&v| Complex::new(v, T::zero())).collect()
}

pub fn real_part<T: Real>(values: &[Complex<T>]) -> Vec<T> {
    values.iter().map(|c| c.re).collect()
}
