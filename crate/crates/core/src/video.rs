//! Frame-sequence ingestion and spatial standardization.

use std::path::{Path, PathBuf};

use image::DynamicImage;
use ndarray::{s, Array4, Axis};

use crate::error::{Error, Result};
use crate::interp::bilinear_resize;
use crate::scalar::Real;

/// `T×H×W×3` RGB intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbVideo<T: Real = f64> {
    pub frames: Array4<T>,
    pub frame_rate_hint: Option<f64>,
    pub source_id: String,
}

impl<T: Real> RgbVideo<T> {
    pub fn new(frames: Array4<T>, source_id: impl Into<String>) -> Result<Self> {
        let (t, h, w, ch) = frames.dim();
        if t == 0 || h == 0 || w == 0 {
            return Err(Error::shape(format!("empty video {t}x{h}x{w}")));
        }
        if ch != 3 {
            return Err(Error::shape(format!("expected 3 color channels, got {ch}")));
        }
        if frames.iter().any(|&v| !(v >= T::zero() && v <= T::one())) {
            return Err(Error::invalid("video intensities must lie in [0, 1]"));
        }
        Ok(Self {
            frames,
            frame_rate_hint: None,
            source_id: source_id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.frames.dim().0
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `(H, W)`.
    pub fn frame_shape(&self) -> (usize, usize) {
        let (_, h, w, _) = self.frames.dim();
        (h, w)
    }

    pub fn cast<U: Real>(&self) -> RgbVideo<U> {
        RgbVideo {
            frames: self.frames.mapv(|v| U::of(v.as_f64())),
            frame_rate_hint: self.frame_rate_hint,
            source_id: self.source_id.clone(),
        }
    }

    /// Write every frame as an 8-bit PNG (`frame_0000.png`, ...) into `dir`.
    pub fn save_png_frames(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let (_, h, w, _) = self.frames.dim();
        for (i, frame) in self.frames.axis_iter(Axis(0)).enumerate() {
            let raw: Vec<u8> = frame.iter().map(|v| (v.as_f64() * 255.0).round() as u8).collect();
            let img = image::RgbImage::from_raw(w as u32, h as u32, raw).expect("frame buffer size");
            let path = dir.join(format!("frame_{i:04}.png"));
            img.save(&path).map_err(|e| Error::Image {
                path: path.clone(),
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Keep only the first `n` frames.
    pub fn truncate(&mut self, n: usize) {
        if n < self.len() {
            self.frames = self.frames.slice(s![..n, .., .., ..]).to_owned();
        }
    }
}

fn is_frame_file(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "ppm"))
        .unwrap_or(false)
}

/// Sorted frame files (`.png` / `.ppm`) in `dir`.
pub fn list_frame_files(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::Missing(dir.to_path_buf()));
    }
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && is_frame_file(&path) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Decode one frame into `H×W×3` values normalized by the maximum code value.
fn decode_frame<T: Real>(path: &Path) -> Result<(usize, usize, Vec<T>)> {
    let img = image::open(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let sixteen_bit = matches!(
        img,
        DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
            | DynamicImage::ImageRgb16(_)
            | DynamicImage::ImageRgba16(_)
    );
    let (w, h) = (img.width() as usize, img.height() as usize);
    let values = if sixteen_bit {
        let scale = 1.0 / u16::MAX as f64;
        img.into_rgb16()
            .into_raw()
            .into_iter()
            .map(|v| T::of(v as f64 * scale))
            .collect()
    } else {
        let scale = 1.0 / u8::MAX as f64;
        img.into_rgb8()
            .into_raw()
            .into_iter()
            .map(|v| T::of(v as f64 * scale))
            .collect()
    };
    Ok((h, w, values))
}

/// Load the first `limit` frames of a directory of identically sized images.
pub fn load_frame_sequence<T: Real>(dir: &Path, limit: usize) -> Result<RgbVideo<T>> {
    if limit == 0 {
        return Err(Error::invalid("frame limit must be at least 1"));
    }
    let files = list_frame_files(dir)?;
    if files.is_empty() {
        return Err(Error::invalid(format!("no .png/.ppm frames in {}", dir.display())));
    }
    let files = &files[..files.len().min(limit)];
    let mut shape = None;
    let mut data = Vec::new();
    for path in files {
        let (h, w, values) = decode_frame::<T>(path)?;
        match shape {
            None => shape = Some((h, w)),
            Some(s) if s != (h, w) => {
                return Err(Error::shape(format!(
                    "{} is {}x{}, expected {}x{}",
                    path.display(),
                    h,
                    w,
                    s.0,
                    s.1
                )))
            }
            _ => {}
        }
        data.extend(values);
    }
    let (h, w) = shape.expect("at least one frame");
    let frames = Array4::from_shape_vec((files.len(), h, w, 3), data).map_err(|e| Error::shape(e.to_string()))?;
    let id = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    RgbVideo::new(frames, id)
}

/// Resample every frame and channel independently to `out_h × out_w`.
pub fn downsample_bilinear<T: Real>(video: &RgbVideo<T>, out_h: usize, out_w: usize) -> Result<RgbVideo<T>> {
    if out_h < 2 || out_w < 2 {
        return Err(Error::invalid(format!(
            "target size {out_h}x{out_w} too small (minimum 2x2)"
        )));
    }
    let t = video.len();
    let mut out = Array4::zeros((t, out_h, out_w, 3));
    for (src, mut dst) in video.frames.axis_iter(Axis(0)).zip(out.axis_iter_mut(Axis(0))) {
        for ch in 0..3 {
            let plane = bilinear_resize(src.index_axis(Axis(2), ch), out_h, out_w);
            dst.index_axis_mut(Axis(2), ch).assign(&plane);
        }
    }
    Ok(RgbVideo {
        frames: out,
        frame_rate_hint: video.frame_rate_hint,
        source_id: video.source_id.clone(),
    })
}
