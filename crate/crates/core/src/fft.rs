//! Centered, orthonormal 2D DFT.
//!
//! Index `n` of an axis of length `N` maps to the signed coordinate `n - N/2`
//! in both image and k-space, so DC sits at `[H/2, W/2]`. Both directions
//! are scaled by `1/sqrt(N)` per axis, which makes the transform unitary.

use std::sync::Arc;

use ndarray::ArrayViewMut2;
use num_complex::Complex;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::scalar::Real;

#[derive(Clone)]
pub struct Fft2<T: Real> {
    h: usize,
    w: usize,
    rows: [Arc<dyn Fft<T>>; 2],
    cols: [Arc<dyn Fft<T>>; 2],
}

impl<T: Real> std::fmt::Debug for Fft2<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("h", &self.h).field("w", &self.w).finish()
    }
}

impl<T: Real> Fft2<T> {
    pub fn new(h: usize, w: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            h,
            w,
            rows: [planner.plan_fft_forward(w), planner.plan_fft_inverse(w)],
            cols: [planner.plan_fft_forward(h), planner.plan_fft_inverse(h)],
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    /// In-place centered forward transform, orthonormal.
    pub fn forward(&self, data: ArrayViewMut2<Complex<T>>) {
        self.run(data, FftDirection::Forward, true);
    }

    /// In-place centered inverse transform, orthonormal.
    pub fn inverse(&self, data: ArrayViewMut2<Complex<T>>) {
        self.run(data, FftDirection::Inverse, true);
    }

    /// Centered transform without the `1/sqrt(HW)` factor.
    pub fn forward_unscaled(&self, data: ArrayViewMut2<Complex<T>>) {
        self.run(data, FftDirection::Forward, false);
    }

    pub fn inverse_unscaled(&self, data: ArrayViewMut2<Complex<T>>) {
        self.run(data, FftDirection::Inverse, false);
    }

    fn run(&self, mut data: ArrayViewMut2<Complex<T>>, dir: FftDirection, scaled: bool) {
        assert_eq!(data.dim(), (self.h, self.w), "Fft2 shape mismatch");
        let d = match dir {
            FftDirection::Forward => 0,
            FftDirection::Inverse => 1,
        };
        let scale = if scaled {
            T::one() / T::of_usize(self.h * self.w).sqrt()
        } else {
            T::one()
        };
        match data.as_slice_mut() {
            Some(buf) => self.run_slice(buf, d, scale),
            None => {
                let mut tmp: Vec<Complex<T>> = data.iter().copied().collect();
                self.run_slice(&mut tmp, d, scale);
                data.iter_mut().zip(tmp).for_each(|(v, t)| *v = t);
            }
        }
    }

    fn run_slice(&self, buf: &mut [Complex<T>], d: usize, scale: T) {
        let (h, w) = (self.h, self.w);
        let mut scratch = vec![
            Complex::new(T::zero(), T::zero());
            self.rows[d]
                .get_inplace_scratch_len()
                .max(self.cols[d].get_inplace_scratch_len())
        ];
        centered_batch(&*self.rows[d], buf, w, &mut scratch);
        let mut cols = vec![Complex::new(T::zero(), T::zero()); h * w];
        transpose(buf, &mut cols, h, w, T::one());
        centered_batch(&*self.cols[d], &mut cols, h, &mut scratch);
        transpose(&cols, buf, w, h, scale);
    }
}

/// Blocked transpose of a row-major `h×w` matrix into `dst` (`w×h`), scaled.
fn transpose<T: Real>(src: &[Complex<T>], dst: &mut [Complex<T>], h: usize, w: usize, scale: T) {
    transpose_strided(src, w, dst, h, h, w, scale);
}

/// Write the transpose of the `h×w` block at the start of `src` (row stride
/// `src_stride`) into `dst` (row stride `dst_stride`), scaled.
pub(crate) fn transpose_strided<T: Real>(
    src: &[Complex<T>],
    src_stride: usize,
    dst: &mut [Complex<T>],
    dst_stride: usize,
    h: usize,
    w: usize,
    scale: T,
) {
    const B: usize = 16;
    for y0 in (0..h).step_by(B) {
        for x0 in (0..w).step_by(B) {
            for y in y0..(y0 + B).min(h) {
                for x in x0..(x0 + B).min(w) {
                    dst[x * dst_stride + y] = src[y * src_stride + x] * scale;
                }
            }
        }
    }
}

/// Centered transforms of consecutive length-`n` chunks.
///
/// For even `n` the index shifts are applied as sign modulations:
/// `out[k] = (-1)^(k + n/2) · FFT((-1)^j x[j])[k]`.
fn centered_batch<T: Real>(fft: &dyn Fft<T>, buf: &mut [Complex<T>], n: usize, scratch: &mut [Complex<T>]) {
    if n % 2 == 0 {
        for line in buf.chunks_exact_mut(n) {
            line.iter_mut().skip(1).step_by(2).for_each(|v| *v = -*v);
        }
        fft.process_with_scratch(buf, scratch);
        let first = (n / 2) % 2;
        for line in buf.chunks_exact_mut(n) {
            line.iter_mut().skip(1 - first).step_by(2).for_each(|v| *v = -*v);
        }
    } else {
        for line in buf.chunks_exact_mut(n) {
            centered_1d(fft, line, scratch);
        }
    }
}

fn centered_1d<T: Real>(fft: &dyn Fft<T>, line: &mut [Complex<T>], scratch: &mut [Complex<T>]) {
    let c = line.len() / 2;
    line.rotate_left(c);
    fft.process_with_scratch(line, scratch);
    line.rotate_right(c);
}
