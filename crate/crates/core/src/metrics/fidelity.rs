use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::series::MagnitudeSeries;

fn same_shape<T: Real>(a: &MagnitudeSeries<T>, b: &MagnitudeSeries<T>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::shape(format!(
            "series shapes differ: {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    if a.data.is_empty() {
        return Err(Error::invalid("empty series"));
    }
    Ok(())
}

/// Mean squared difference over all pixels and frames.
pub fn mse<T: Real>(a: &MagnitudeSeries<T>, b: &MagnitudeSeries<T>) -> Result<f64> {
    same_shape(a, b)?;
    let sum: f64 = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(x, y)| (x.as_f64() - y.as_f64()).powi(2))
        .sum();
    Ok(sum / a.data.len() as f64)
}

/// `10·log10(peak² / mse)`; `peak` defaults to `max(b)`. Identical inputs give `+inf`.
pub fn psnr<T: Real>(a: &MagnitudeSeries<T>, b: &MagnitudeSeries<T>, peak: Option<f64>) -> Result<f64> {
    let m = mse(a, b)?;
    let peak = peak.unwrap_or_else(|| b.max().as_f64());
    if m == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak * peak / m).log10())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsimParams {
    pub window: usize,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    /// Dynamic range; `max(b) - min(b)` over the series when unset.
    pub data_range: Option<f64>,
}

impl Default for SsimParams {
    fn default() -> Self {
        Self {
            window: 11,
            sigma: 1.5,
            k1: 0.01,
            k2: 0.03,
            data_range: None,
        }
    }
}

/// Normalized 1D Gaussian taps.
pub fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let g: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|v| v / s).collect()
}

/// Separable "valid" filtering.
fn filter_valid(img: &Array2<f64>, g: &[f64]) -> Array2<f64> {
    let (h, w) = img.dim();
    let n = g.len();
    let (oh, ow) = (h + 1 - n, w + 1 - n);
    let mut rows = Array2::<f64>::zeros((h, ow));
    for y in 0..h {
        for x in 0..ow {
            rows[[y, x]] = (0..n).map(|i| g[i] * img[[y, x + i]]).sum();
        }
    }
    let mut out = Array2::<f64>::zeros((oh, ow));
    for y in 0..oh {
        for x in 0..ow {
            out[[y, x]] = (0..n).map(|i| g[i] * rows[[y + i, x]]).sum();
        }
    }
    out
}

/// Mean SSIM of one frame over all fully contained windows.
pub fn ssim_frame(a: ArrayView2<f64>, b: ArrayView2<f64>, range: f64, p: &SsimParams) -> Result<f64> {
    let (h, w) = a.dim();
    if b.dim() != (h, w) {
        return Err(Error::shape(format!(
            "frame shapes differ: {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    if h < p.window || w < p.window {
        return Err(Error::invalid(format!(
            "{h}x{w} image is smaller than the {0}x{0} window",
            p.window
        )));
    }
    let g = gaussian_window(p.window, p.sigma);
    let (a, b) = (a.to_owned(), b.to_owned());
    let mu_a = filter_valid(&a, &g);
    let mu_b = filter_valid(&b, &g);
    let aa = filter_valid(&(&a * &a), &g);
    let bb = filter_valid(&(&b * &b), &g);
    let ab = filter_valid(&(&a * &b), &g);
    let c1 = (p.k1 * range).powi(2);
    let c2 = (p.k2 * range).powi(2);
    let mut total = 0.0;
    for ((((&ma, &mb), &saa), &sbb), &sab) in mu_a.iter().zip(&mu_b).zip(&aa).zip(&bb).zip(&ab) {
        let va = saa - ma * ma;
        let vb = sbb - mb * mb;
        let cov = sab - ma * mb;
        total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    Ok(total / mu_a.len() as f64)
}

/// Per-frame SSIM averaged over frames.
pub fn ssim<T: Real>(a: &MagnitudeSeries<T>, b: &MagnitudeSeries<T>, p: &SsimParams) -> Result<f64> {
    same_shape(a, b)?;
    let range = p.data_range.unwrap_or_else(|| b.max().as_f64() - b.min().as_f64());
    let mut total = 0.0;
    for (fa, fb) in a.data.axis_iter(Axis(0)).zip(b.data.axis_iter(Axis(0))) {
        total += ssim_frame(fa.mapv(|v| v.as_f64()).view(), fb.mapv(|v| v.as_f64()).view(), range, p)?;
    }
    Ok(total / a.frames() as f64)
}
