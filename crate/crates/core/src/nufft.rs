//! Type-1/type-2 style non-uniform FFT by Kaiser–Bessel convolution gridding.
//!
//! Conventions: an `H×W` image pixel `(y, x)` sits at the centered position
//! `(y - H/2, x - W/2)`; k-space coordinates are `(k_y, k_x)` in cycles per
//! pixel, each in `[-0.5, 0.5)`. The forward transform evaluates
//!
//! ```text
//! s(k) = sum_{y,x} img[y,x] * exp(-2πi (k_y (y - H/2) + k_x (x - W/2)))
//! ```
//!
//! without normalization, and the adjoint is its exact conjugate transpose
//! (optionally preceded by per-sample density weights).

use std::sync::Arc;

use ndarray::{Array2, ArrayView2, ArrayViewMut2};
use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::fft::{transpose_strided, Fft2};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NufftParams {
    pub oversampling: f64,
    /// Kernel support in oversampled-grid cells.
    pub kernel_width: usize,
}

impl Default for NufftParams {
    fn default() -> Self {
        Self {
            oversampling: 2.0,
            kernel_width: 7,
        }
    }
}

/// Modified Bessel function of the first kind, order zero (power series).
pub fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut k = 1.0;
    while term > 1e-17 * sum {
        term *= q / (k * k);
        sum += term;
        k += 1.0;
    }
    sum
}

/// Kaiser–Bessel shape parameter for a given width and oversampling
/// (Beatty, Nishimura & Pauly).
pub fn kaiser_bessel_beta(width: usize, oversampling: f64) -> f64 {
    let j = width as f64;
    let a = oversampling;
    std::f64::consts::PI * ((j / a).powi(2) * (a - 0.5).powi(2) - 0.8).sqrt()
}

/// Kaiser–Bessel gridding kernel in grid cells, scaled so its continuous
/// Fourier transform equals 1 at zero frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KaiserBessel {
    pub width: usize,
    pub beta: f64,
    norm: f64,
}

impl KaiserBessel {
    pub fn new(width: usize, beta: f64) -> Self {
        let mut kb = Self { width, beta, norm: 1.0 };
        kb.norm = 1.0 / kb.transform(0.0);
        kb
    }

    /// Kernel value at offset `u` (grid cells).
    pub fn eval(&self, u: f64) -> f64 {
        let half = self.width as f64 / 2.0;
        if u.abs() > half {
            return 0.0;
        }
        let r = 1.0 - (u / half).powi(2);
        self.norm * bessel_i0(self.beta * r.max(0.0).sqrt())
    }

    /// Continuous Fourier transform at `nu` cycles per grid cell.
    pub fn transform(&self, nu: f64) -> f64 {
        let j = self.width as f64;
        let z2 = self.beta * self.beta - (std::f64::consts::PI * j * nu).powi(2);
        let shape = if z2 > 0.0 {
            let z = z2.sqrt();
            z.sinh() / z
        } else if z2 < 0.0 {
            let z = (-z2).sqrt();
            z.sin() / z
        } else {
            1.0
        };
        self.norm * j * shape
    }
}

/// Interpolation taps for a set of sample locations, reusable across calls.
#[derive(Debug, Clone)]
pub struct PreparedSamples<T: Real> {
    len: usize,
    width: usize,
    iy: Vec<u32>,
    wy: Vec<T>,
    ix: Vec<u32>,
    wx: Vec<T>,
}

impl<T: Real> PreparedSamples<T> {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Immutable transform plan for one image size.
#[derive(Debug, Clone)]
pub struct NufftPlan<T: Real> {
    h: usize,
    w: usize,
    gh: usize,
    gw: usize,
    kernel: KaiserBessel,
    deapod_y: Vec<T>,
    deapod_x: Vec<T>,
    fft: Fft2<T>,
}

/// Oversampled size: `round(alpha * n)`, bumped to even.
fn grid_size(n: usize, alpha: f64) -> usize {
    let g = (alpha * n as f64).round() as usize;
    g + (g % 2)
}

impl<T: Real> NufftPlan<T> {
    pub fn new(h: usize, w: usize, params: NufftParams) -> Result<Self> {
        if h == 0 || w == 0 {
            return Err(Error::invalid("NUFFT image size must be nonzero"));
        }
        if !(params.oversampling >= 1.25) {
            return Err(Error::invalid("NUFFT oversampling must be at least 1.25"));
        }
        if params.kernel_width < 2 {
            return Err(Error::invalid("NUFFT kernel width must be at least 2"));
        }
        let gh = grid_size(h, params.oversampling).max(params.kernel_width);
        let gw = grid_size(w, params.oversampling).max(params.kernel_width);
        let beta = kaiser_bessel_beta(params.kernel_width, params.oversampling);
        let kernel = KaiserBessel::new(params.kernel_width, beta);
        let deapod = |n: usize, g: usize| -> Vec<T> {
            (0..n)
                .map(|i| T::of(kernel.transform((i as f64 - (n / 2) as f64) / g as f64)))
                .collect()
        };
        Ok(Self {
            h,
            w,
            gh,
            gw,
            kernel,
            deapod_y: deapod(h, gh),
            deapod_x: deapod(w, gw),
            fft: Fft2::new(gh, gw),
        })
    }

    pub fn image_shape(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    pub fn grid_shape(&self) -> (usize, usize) {
        (self.gh, self.gw)
    }

    pub fn kernel(&self) -> &KaiserBessel {
        &self.kernel
    }

    /// Pixelwise apodization correction (strictly positive).
    pub fn apodization(&self) -> Array2<T> {
        Array2::from_shape_fn((self.h, self.w), |(y, x)| self.deapod_y[y] * self.deapod_x[x])
    }

    /// Precompute taps for `coords` (`S×2`, columns `(k_y, k_x)`).
    pub fn prepare(&self, coords: ArrayView2<T>) -> Result<PreparedSamples<T>> {
        if coords.ncols() != 2 {
            return Err(Error::shape(format!("coordinates must be S×2, got {:?}", coords.dim())));
        }
        let n = coords.nrows();
        let j = self.kernel.width;
        let mut prep = PreparedSamples {
            len: n,
            width: j,
            iy: Vec::with_capacity(n * j),
            wy: Vec::with_capacity(n * j),
            ix: Vec::with_capacity(n * j),
            wx: Vec::with_capacity(n * j),
        };
        for (s, row) in coords.outer_iter().enumerate() {
            let (ky, kx) = (row[0].as_f64(), row[1].as_f64());
            if !(-0.5..0.5).contains(&ky) || !(-0.5..0.5).contains(&kx) {
                return Err(Error::invalid(format!(
                    "sample {s} at ({ky}, {kx}) outside [-0.5, 0.5)"
                )));
            }
            self.push_taps(ky, self.gh, &mut prep.iy, &mut prep.wy);
            self.push_taps(kx, self.gw, &mut prep.ix, &mut prep.wx);
        }
        Ok(prep)
    }

    fn push_taps(&self, k: f64, g: usize, idx: &mut Vec<u32>, wts: &mut Vec<T>) {
        let j = self.kernel.width as i64;
        let kappa = k * g as f64;
        let first = (kappa - j as f64 / 2.0).floor() as i64 + 1;
        let half = (g / 2) as i64;
        for u in first..first + j {
            let index = (u + half).rem_euclid(g as i64) as u32;
            idx.push(index);
            wts.push(T::of(self.kernel.eval(kappa - u as f64)));
        }
    }

    /// Forward transform into `out` using precomputed taps.
    pub fn forward_prepared(&self, image: ArrayView2<Complex<T>>, prep: &PreparedSamples<T>, out: &mut [Complex<T>]) {
        assert_eq!(image.dim(), (self.h, self.w), "image shape does not match plan");
        assert_eq!(out.len(), prep.len, "output length does not match samples");
        let mut grid = Array2::from_elem((self.gh, self.gw), Complex::new(T::zero(), T::zero()));
        let oy = self.gh / 2 - self.h / 2;
        let ox = self.gw / 2 - self.w / 2;
        for ((y, x), v) in image.indexed_iter() {
            grid[[y + oy, x + ox]] = *v / (self.deapod_y[y] * self.deapod_x[x]);
        }
        self.fft.forward_unscaled(grid.view_mut());
        let j = prep.width;
        let g = grid.as_slice().expect("grid is contiguous");
        for (s, o) in out.iter_mut().enumerate() {
            let (iy, wy) = (&prep.iy[s * j..(s + 1) * j], &prep.wy[s * j..(s + 1) * j]);
            let (ix, wx) = (&prep.ix[s * j..(s + 1) * j], &prep.wx[s * j..(s + 1) * j]);
            let mut acc = Complex::new(T::zero(), T::zero());
            for (&ry, &vy) in iy.iter().zip(wy) {
                let row = &g[ry as usize * self.gw..(ry as usize + 1) * self.gw];
                let mut racc = Complex::new(T::zero(), T::zero());
                for (&cx, &vx) in ix.iter().zip(wx) {
                    racc += row[cx as usize] * vx;
                }
                acc += racc * vy;
            }
            *o = acc;
        }
    }

    /// Adjoint transform (density-weighted when `dcf` is given) into `out`.
    pub fn adjoint_prepared(
        &self,
        samples: &[Complex<T>],
        prep: &PreparedSamples<T>,
        dcf: Option<&[T]>,
        mut out: ArrayViewMut2<Complex<T>>,
    ) {
        assert_eq!(out.dim(), (self.h, self.w), "image shape does not match plan");
        assert_eq!(samples.len(), prep.len, "sample count does not match taps");
        let mut grid = Array2::from_elem((self.gh, self.gw), Complex::new(T::zero(), T::zero()));
        let j = prep.width;
        let gw = self.gw;
        let g = grid.as_slice_mut().expect("grid is contiguous");
        for (s, &v) in samples.iter().enumerate() {
            let v = match dcf {
                Some(d) => v * d[s],
                None => v,
            };
            let (iy, wy) = (&prep.iy[s * j..(s + 1) * j], &prep.wy[s * j..(s + 1) * j]);
            let (ix, wx) = (&prep.ix[s * j..(s + 1) * j], &prep.wx[s * j..(s + 1) * j]);
            for (&ry, &vy) in iy.iter().zip(wy) {
                let vy = v * vy;
                let row = &mut g[ry as usize * gw..(ry as usize + 1) * gw];
                for (&cx, &vx) in ix.iter().zip(wx) {
                    row[cx as usize] += vy * vx;
                }
            }
        }
        self.fft.inverse_unscaled(grid.view_mut());
        let oy = self.gh / 2 - self.h / 2;
        let ox = self.gw / 2 - self.w / 2;
        for ((y, x), o) in out.indexed_iter_mut() {
            *o = grid[[y + oy, x + ox]] / (self.deapod_y[y] * self.deapod_x[x]);
        }
    }

    pub fn forward(&self, image: ArrayView2<Complex<T>>, coords: ArrayView2<T>) -> Result<Vec<Complex<T>>> {
        if image.dim() != (self.h, self.w) {
            return Err(Error::shape(format!(
                "image is {:?}, plan expects {}x{}",
                image.dim(),
                self.h,
                self.w
            )));
        }
        let prep = self.prepare(coords)?;
        let mut out = vec![Complex::new(T::zero(), T::zero()); prep.len];
        self.forward_prepared(image, &prep, &mut out);
        Ok(out)
    }

    pub fn adjoint(
        &self,
        samples: &[Complex<T>],
        coords: ArrayView2<T>,
        dcf: Option<&[T]>,
    ) -> Result<Array2<Complex<T>>> {
        if samples.len() != coords.nrows() {
            return Err(Error::shape(format!(
                "{} samples for {} coordinates",
                samples.len(),
                coords.nrows()
            )));
        }
        if let Some(d) = dcf {
            if d.len() != samples.len() {
                return Err(Error::shape(format!(
                    "{} weights for {} samples",
                    d.len(),
                    samples.len()
                )));
            }
        }
        let prep = self.prepare(coords)?;
        let mut out = Array2::from_elem((self.h, self.w), Complex::new(T::zero(), T::zero()));
        self.adjoint_prepared(samples, &prep, dcf, out.view_mut());
        Ok(out)
    }

    /// Spread real weights onto the oversampled grid (no FFT); used by density compensation.
    pub(crate) fn spread_real(&self, prep: &PreparedSamples<T>, weights: &[f64]) -> Array2<f64> {
        let mut grid = Array2::zeros((self.gh, self.gw));
        let j = prep.width;
        for (s, &v) in weights.iter().enumerate() {
            for a in 0..j {
                let vy = v * prep.wy[s * j + a].as_f64();
                let mut row = grid.row_mut(prep.iy[s * j + a] as usize);
                for b in 0..j {
                    row[prep.ix[s * j + b] as usize] += vy * prep.wx[s * j + b].as_f64();
                }
            }
        }
        grid
    }

    /// Interpolate a real grid back to the samples.
    pub(crate) fn gather_real(&self, prep: &PreparedSamples<T>, grid: &Array2<f64>, out: &mut [f64]) {
        let j = prep.width;
        for (s, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for a in 0..j {
                let row = grid.row(prep.iy[s * j + a] as usize);
                let mut racc = 0.0;
                for b in 0..j {
                    racc += row[prep.ix[s * j + b] as usize] * prep.wx[s * j + b].as_f64();
                }
                acc += racc * prep.wy[s * j + a].as_f64();
            }
            *o = acc;
        }
    }
}

/// `Fᴴ F` of one sample set as a convolution, evaluated with zero-padded
/// FFTs of twice the image size.
#[derive(Clone)]
pub struct ToeplitzKernel<T: Real> {
    h: usize,
    w: usize,
    /// Spectrum of the point-spread function, transposed (`2W×2H`), prescaled.
    spectrum: Vec<Complex<T>>,
    rows: [Arc<dyn Fft<T>>; 2],
    cols: [Arc<dyn Fft<T>>; 2],
}

impl<T: Real> std::fmt::Debug for ToeplitzKernel<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ToeplitzKernel")
            .field("h", &self.h)
            .field("w", &self.w)
            .finish()
    }
}

impl<T: Real> ToeplitzKernel<T> {
    /// Kernel for `scale · Fᴴ F` on `h×w` images with samples `coords`.
    pub fn new(h: usize, w: usize, coords: ArrayView2<T>, params: NufftParams, scale: f64) -> Result<Self> {
        let (h2, w2) = (2 * h, 2 * w);
        let big = NufftPlan::<T>::new(h2, w2, params)?;
        let ones = vec![Complex::new(T::one(), T::zero()); coords.nrows()];
        let psf = big.adjoint(&ones, coords, None)?;
        let mut planner = FftPlanner::new();
        let rows = [planner.plan_fft_forward(w2), planner.plan_fft_inverse(w2)];
        let cols = [planner.plan_fft_forward(h2), planner.plan_fft_inverse(h2)];
        // Image pixel i holds offset i - h; circular position is (i + h) mod 2h.
        let mut grid = vec![Complex::new(T::zero(), T::zero()); h2 * w2];
        for ((y, x), v) in psf.indexed_iter() {
            grid[((y + h) % h2) * w2 + (x + w) % w2] = *v;
        }
        let mut scratch = vec![
            Complex::new(T::zero(), T::zero());
            rows[0].get_inplace_scratch_len().max(cols[0].get_inplace_scratch_len())
        ];
        rows[0].process_with_scratch(&mut grid, &mut scratch);
        let mut spectrum = vec![Complex::new(T::zero(), T::zero()); h2 * w2];
        for y in 0..h2 {
            for x in 0..w2 {
                spectrum[x * h2 + y] = grid[y * w2 + x];
            }
        }
        cols[0].process_with_scratch(&mut spectrum, &mut scratch);
        let norm = T::of(scale / (h2 * w2) as f64);
        spectrum.iter_mut().for_each(|v| *v = *v * norm);
        Ok(Self {
            h,
            w,
            spectrum,
            rows,
            cols,
        })
    }

    /// `out = scale · Fᴴ F img`.
    pub fn apply(&self, img: ArrayView2<Complex<T>>, out: ArrayViewMut2<Complex<T>>) {
        let mut work = self.workspace();
        self.apply_with(img, out, &mut work);
    }

    /// Buffers for [`ToeplitzKernel::apply_with`]; reusable across calls
    /// on kernels of the same shape.
    pub fn workspace(&self) -> ToeplitzWork<T> {
        let zero = Complex::new(T::zero(), T::zero());
        ToeplitzWork {
            rows: vec![zero; self.h * 2 * self.w],
            cols: vec![zero; 4 * self.h * self.w],
            scratch: vec![
                zero;
                self.rows[0]
                    .get_inplace_scratch_len()
                    .max(self.cols[0].get_inplace_scratch_len())
            ],
        }
    }

    pub fn apply_with(
        &self,
        img: ArrayView2<Complex<T>>,
        mut out: ArrayViewMut2<Complex<T>>,
        work: &mut ToeplitzWork<T>,
    ) {
        let (h, w, h2, w2) = (self.h, self.w, 2 * self.h, 2 * self.w);
        assert_eq!(img.dim(), (h, w), "image shape does not match kernel");
        assert_eq!(work.cols.len(), h2 * w2, "workspace shape does not match kernel");
        let zero = Complex::new(T::zero(), T::zero());
        let ToeplitzWork { rows, cols, scratch } = work;
        // Rows h..2h of the padded image are zero, so only the first h rows need transforming.
        for (y, line) in img.outer_iter().enumerate() {
            let row = &mut rows[y * w2..(y + 1) * w2];
            row[..w].iter_mut().zip(line).for_each(|(r, v)| *r = *v);
            row[w..].iter_mut().for_each(|r| *r = zero);
        }
        self.rows[0].process_with_scratch(rows, scratch);
        cols.iter_mut().for_each(|c| *c = zero);
        transpose_strided(rows, w2, cols, h2, h, w2, T::one());
        self.cols[0].process_with_scratch(cols, scratch);
        cols.iter_mut().zip(&self.spectrum).for_each(|(c, k)| *c = *c * *k);
        self.cols[1].process_with_scratch(cols, scratch);
        transpose_strided(cols, h2, rows, w2, w2, h, T::one());
        self.rows[1].process_with_scratch(rows, scratch);
        for (y, mut line) in out.outer_iter_mut().enumerate() {
            line.iter_mut()
                .zip(&rows[y * w2..y * w2 + w])
                .for_each(|(o, v)| *o = *v);
        }
    }
}

/// Scratch buffers for one Toeplitz application.
#[derive(Debug, Clone)]
pub struct ToeplitzWork<T: Real> {
    rows: Vec<Complex<T>>,
    cols: Vec<Complex<T>>,
    scratch: Vec<Complex<T>>,
}
