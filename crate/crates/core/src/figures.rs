//! PNG dumps of magnitude series: selected frames and a y-t profile.

use std::path::{Path, PathBuf};

use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::series::MagnitudeSeries;

/// 8-bit grayscale image of `values / peak`, clipped to `[0, 1]`.
pub fn save_gray_png<T: Real>(values: ArrayView2<T>, peak: f64, path: &Path) -> Result<()> {
    let (h, w) = values.dim();
    let scale = if peak > 0.0 { 255.0 / peak } else { 0.0 };
    let raw: Vec<u8> = values
        .iter()
        .map(|v| (v.as_f64() * scale).round().clamp(0.0, 255.0) as u8)
        .collect();
    let img = image::GrayImage::from_raw(w as u32, h as u32, raw).expect("buffer matches size");
    img.save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// `H×T` image of column `x` over time.
pub fn yt_profile<T: Real>(series: &MagnitudeSeries<T>, x: usize) -> Result<Array2<T>> {
    let (_, _, w) = series.dim();
    if x >= w {
        return Err(Error::invalid(format!("profile column {x} outside width {w}")));
    }
    Ok(series.data.index_axis(Axis(2), x).t().to_owned())
}

/// First, middle and last frame plus the central y-t profile, scaled by the
/// series maximum. Returns the written paths.
pub fn emit_figures<T: Real>(series: &MagnitudeSeries<T>, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (t, _, w) = series.dim();
    let peak = series.max().as_f64();
    let mut frames = vec![0, t / 2, t - 1];
    frames.dedup();
    let mut out = Vec::new();
    for f in frames {
        let path = dir.join(format!("{stem}_frame{f:04}.png"));
        save_gray_png(series.data.index_axis(Axis(0), f), peak, &path)?;
        out.push(path);
    }
    let path = dir.join(format!("{stem}_yt.png"));
    save_gray_png(yt_profile(series, w / 2)?.view(), peak, &path)?;
    out.push(path);
    Ok(out)
}
