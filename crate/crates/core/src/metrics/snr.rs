use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::series::MagnitudeSeries;

/// Region of interest, fixed across frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Roi {
    Rect {
        y: usize,
        x: usize,
        height: usize,
        width: usize,
    },
    Pixels {
        pixels: Vec<(usize, usize)>,
    },
}

impl Roi {
    pub fn pixels(&self) -> Vec<(usize, usize)> {
        match self {
            Roi::Rect { y, x, height, width } => (*y..y + height)
                .flat_map(|r| (*x..x + width).map(move |c| (r, c)))
                .collect(),
            Roi::Pixels { pixels } => pixels.clone(),
        }
    }
}

const MIN_ROI: usize = 16;

/// `20·log10(mean(signal) / std(noise))`, both pooled over all frames.
/// A noise region without variance gives `+inf`.
pub fn snr_estimate<T: Real>(img: &MagnitudeSeries<T>, signal: &Roi, noise: &Roi) -> Result<f64> {
    let (_, h, w) = img.dim();
    let (sp, np) = (signal.pixels(), noise.pixels());
    for (name, px) in [("signal", &sp), ("noise", &np)] {
        let unique: HashSet<_> = px.iter().collect();
        if unique.len() < MIN_ROI {
            return Err(Error::invalid(format!(
                "{name} ROI has {} pixels, need at least {MIN_ROI}",
                unique.len()
            )));
        }
        if let Some(p) = px.iter().find(|&&(y, x)| y >= h || x >= w) {
            return Err(Error::invalid(format!("{name} ROI pixel {p:?} outside {h}x{w} image")));
        }
    }
    let sset: HashSet<_> = sp.iter().collect();
    if np.iter().any(|p| sset.contains(p)) {
        return Err(Error::invalid("signal and noise ROIs overlap"));
    }
    let gather = |px: &[(usize, usize)]| -> Vec<f64> {
        img.data
            .outer_iter()
            .flat_map(|f| px.iter().map(move |&(y, x)| f[[y, x]].as_f64()))
            .collect()
    };
    let s = gather(&sp);
    let n = gather(&np);
    let mean_s = s.iter().sum::<f64>() / s.len() as f64;
    let mean_n = n.iter().sum::<f64>() / n.len() as f64;
    let var = n.iter().map(|v| (v - mean_n).powi(2)).sum::<f64>() / (n.len() - 1) as f64;
    if var == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (mean_s / var.sqrt()).log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    #[test]
    fn forty_db() {
        // Noise ROI alternates ±0.01 around 0 with sample std 0.01·sqrt(n/(n-1)).
        let data = Array3::from_shape_fn((2, 16, 16), |(_, y, x)| {
            if y < 8 {
                1.0
            } else if (x + y) % 2 == 0 {
                0.01
            } else {
                -0.01
            }
        });
        let img = MagnitudeSeries::new(data);
        let sig = Roi::Rect {
            y: 0,
            x: 0,
            height: 8,
            width: 16,
        };
        let noi = Roi::Rect {
            y: 8,
            x: 0,
            height: 8,
            width: 16,
        };
        let n: f64 = 2.0 * 128.0;
        let expected = 40.0 - 10.0 * (n / (n - 1.0)).log10();
        assert!((snr_estimate(&img, &sig, &noi).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_rois() {
        let img = MagnitudeSeries::new(Array3::<f64>::ones((1, 16, 16)));
        let a = Roi::Rect {
            y: 0,
            x: 0,
            height: 4,
            width: 4,
        };
        let small = Roi::Rect {
            y: 8,
            x: 8,
            height: 3,
            width: 3,
        };
        assert!(snr_estimate(&img, &a, &small).is_err());
        assert!(snr_estimate(&img, &a, &a).is_err());
        let outside = Roi::Rect {
            y: 14,
            x: 14,
            height: 4,
            width: 4,
        };
        assert!(snr_estimate(&img, &a, &outside).is_err());
        let flat = Roi::Rect {
            y: 8,
            x: 8,
            height: 4,
            width: 4,
        };
        assert_eq!(snr_estimate(&img, &a, &flat).unwrap(), f64::INFINITY);
    }
}
