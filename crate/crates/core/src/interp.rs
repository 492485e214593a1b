//! Separable resampling on pixel-centered grids with edge clamping.
//!
//! Output pixel `i` of an `n_out`-long axis maps to source coordinate
//! `(i + 0.5) * n_in / n_out - 0.5`; coordinates falling outside the source are
//! clamped to the border samples.

use ndarray::{Array2, ArrayView2};

use crate::scalar::Real;

/// Source coordinate of output sample `i` under pixel-center alignment.
#[inline]
pub fn source_coord(i: usize, n_in: usize, n_out: usize) -> f64 {
    (i as f64 + 0.5) * n_in as f64 / n_out as f64 - 0.5
}

/// Bilinear sample at fractional `(y, x)`, clamped to the plane.
pub fn bilinear_sample<T: Real>(plane: ArrayView2<T>, y: f64, x: f64) -> T {
    let (h, w) = plane.dim();
    let (y0, y1, fy) = clamp_pair(y, h);
    let (x0, x1, fx) = clamp_pair(x, w);
    let fy = T::of(fy);
    let fx = T::of(fx);
    let one = T::one();
    let top = plane[[y0, x0]] * (one - fx) + plane[[y0, x1]] * fx;
    let bot = plane[[y1, x0]] * (one - fx) + plane[[y1, x1]] * fx;
    top * (one - fy) + bot * fy
}

/// Neighbour indices and interpolation fraction for coordinate `c` on an axis of length `n`.
fn clamp_pair(c: f64, n: usize) -> (usize, usize, f64) {
    let max = (n - 1) as f64;
    let c = c.clamp(0.0, max);
    let i0 = c.floor() as usize;
    let i1 = (i0 + 1).min(n - 1);
    (i0, i1, c - i0 as f64)
}

pub fn bilinear_resize<T: Real>(src: ArrayView2<T>, out_h: usize, out_w: usize) -> Array2<T> {
    let (h, w) = src.dim();
    let ys: Vec<_> = (0..out_h).map(|i| clamp_pair(source_coord(i, h, out_h), h)).collect();
    let xs: Vec<_> = (0..out_w).map(|j| clamp_pair(source_coord(j, w, out_w), w)).collect();
    let one = T::one();
    Array2::from_shape_fn((out_h, out_w), |(i, j)| {
        let (y0, y1, fy) = ys[i];
        let (x0, x1, fx) = xs[j];
        let (fy, fx) = (T::of(fy), T::of(fx));
        let top = src[[y0, x0]] * (one - fx) + src[[y0, x1]] * fx;
        let bot = src[[y1, x0]] * (one - fx) + src[[y1, x1]] * fx;
        top * (one - fy) + bot * fy
    })
}

/// Keys cubic convolution kernel with `a = -0.5`.
pub fn keys_kernel(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

/// Derivative of [`keys_kernel`].
pub fn keys_kernel_deriv(t: f64) -> f64 {
    const A: f64 = -0.5;
    let s = t.signum();
    let t = t.abs();
    let d = if t <= 1.0 {
        (3.0 * (A + 2.0) * t - 2.0 * (A + 3.0)) * t
    } else if t < 2.0 {
        (3.0 * A * t - 10.0 * A) * t + 8.0 * A
    } else {
        0.0
    };
    s * d
}

/// Four clamped taps and weights for bicubic interpolation at source coordinate `c`.
fn cubic_taps(c: f64, n: usize) -> [(usize, f64); 4] {
    let base = c.floor();
    let frac = c - base;
    let mut taps = [(0usize, 0.0f64); 4];
    for (k, tap) in taps.iter_mut().enumerate() {
        let offset = k as f64 - 1.0;
        let idx = (base + offset).clamp(0.0, (n - 1) as f64) as usize;
        *tap = (idx, keys_kernel(frac - offset));
    }
    taps
}

/// Bicubic (Keys) resampling; used to upscale coarse random fields to smooth maps.
pub fn bicubic_resize(src: ArrayView2<f64>, out_h: usize, out_w: usize) -> Array2<f64> {
    let (h, w) = src.dim();
    let ys: Vec<_> = (0..out_h).map(|i| cubic_taps(source_coord(i, h, out_h), h)).collect();
    let xs: Vec<_> = (0..out_w).map(|j| cubic_taps(source_coord(j, w, out_w), w)).collect();
    Array2::from_shape_fn((out_h, out_w), |(i, j)| {
        let mut acc = 0.0;
        for &(yi, wy) in &ys[i] {
            for &(xj, wx) in &xs[j] {
                acc += wy * wx * src[[yi, xj]];
            }
        }
        acc
    })
}
