use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::bilinear_sample;
use crate::scalar::Real;
use crate::series::MagnitudeSeries;

/// Line segment across an edge, in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub start: (f64, f64),
    pub end: (f64, f64),
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    128
}

impl ProfileSpec {
    pub fn new(start: (f64, f64), end: (f64, f64)) -> Self {
        Self {
            start,
            end,
            samples: default_samples(),
        }
    }

    fn validate(&self, h: usize, w: usize) -> Result<()> {
        if self.start == self.end {
            return Err(Error::invalid("profile endpoints coincide"));
        }
        if self.samples < 2 {
            return Err(Error::invalid("profile needs at least two samples"));
        }
        let inside = |(y, x): (f64, f64)| y >= 0.0 && x >= 0.0 && y <= (h - 1) as f64 && x <= (w - 1) as f64;
        if !inside(self.start) || !inside(self.end) {
            return Err(Error::invalid(format!(
                "profile {:?}→{:?} leaves the {h}x{w} image",
                self.start, self.end
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSharpness {
    pub per_frame: Vec<f64>,
    pub mean: f64,
    pub std_t: f64,
    /// Frames whose profile was flat (sharpness set to 0).
    pub flat_frames: Vec<usize>,
}

/// Bilinear samples along the profile.
pub fn profile_values(frame: ArrayView2<f64>, p: &ProfileSpec) -> Vec<f64> {
    let n = p.samples;
    (0..n)
        .map(|i| {
            let f = i as f64 / (n - 1) as f64;
            let y = p.start.0 + f * (p.end.0 - p.start.0);
            let x = p.start.1 + f * (p.end.1 - p.start.1);
            bilinear_sample(frame, y, x)
        })
        .collect()
}

/// Largest forward difference of the min-max normalized profile, per frame,
/// with its mean and (population) standard deviation over frames.
pub fn edge_sharpness<T: Real>(series: &MagnitudeSeries<T>, profile: &ProfileSpec) -> Result<EdgeSharpness> {
    let (t, h, w) = series.dim();
    if t == 0 {
        return Err(Error::invalid("empty series"));
    }
    profile.validate(h, w)?;
    let mut per_frame = Vec::with_capacity(t);
    let mut flat_frames = Vec::new();
    for (i, frame) in series.data.outer_iter().enumerate() {
        let v = profile_values(frame.mapv(|v| v.as_f64()).view(), profile);
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        if !(hi > lo) {
            flat_frames.push(i);
            per_frame.push(0.0);
            continue;
        }
        let es = v.windows(2).map(|d| (d[1] - d[0]).abs()).fold(0.0, f64::max) / (hi - lo);
        per_frame.push(es);
    }
    let mean = per_frame.iter().sum::<f64>() / t as f64;
    let std_t = (per_frame.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / t as f64).sqrt();
    Ok(EdgeSharpness {
        per_frame,
        mean,
        std_t,
        flat_frames,
    })
}
