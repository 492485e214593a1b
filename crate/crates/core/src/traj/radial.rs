use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use super::{Readout, Trajectory};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Tiny-golden-angle radial sampling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialConfig {
    pub spokes: usize,
    pub samples: usize,
    /// Angle between consecutive spokes, degrees.
    pub angle_increment: f64,
}

impl Default for RadialConfig {
    fn default() -> Self {
        Self {
            spokes: 13,
            samples: 256,
            angle_increment: 23.8,
        }
    }
}

/// Angle of global spoke `n` in degrees, in `[0, 180)`.
pub fn radial_angle_deg(n: usize, increment: f64) -> f64 {
    (n as f64 * increment).rem_euclid(180.0)
}

/// Map a coordinate that rounded onto `0.5` to its periodic image.
pub(crate) fn wrap_k(v: f64) -> f64 {
    if v >= 0.5 {
        v - 1.0
    } else {
        v
    }
}

/// Spokes through DC; global spoke `n = t·spokes + j` sits at `n·increment mod 180°`.
/// Samples along a spoke are `k = (s - S/2)/S`; weights follow the ramp `|k|`
/// in k-space area units, DC taking the innermost nonzero weight.
pub fn radial_trajectory<T: Real>(frames: usize, cfg: &RadialConfig) -> Result<Trajectory<T>> {
    let RadialConfig {
        spokes,
        samples,
        angle_increment,
    } = *cfg;
    if frames == 0 || spokes == 0 || samples < 2 {
        return Err(Error::invalid(format!(
            "radial trajectory needs frames, spokes ≥ 1 and samples ≥ 2 (got {frames}, {spokes}, {samples})"
        )));
    }
    if !angle_increment.is_finite() {
        return Err(Error::invalid("angle increment must be finite"));
    }
    let s_total = spokes * samples;
    let dk = 1.0 / samples as f64;
    let mut coords = Array3::zeros((frames, s_total, 2));
    let mut dcf = Array2::zeros((frames, s_total));
    for t in 0..frames {
        for j in 0..spokes {
            let theta = radial_angle_deg(t * spokes + j, angle_increment).to_radians();
            let (sin, cos) = theta.sin_cos();
            for s in 0..samples {
                let k = (s as f64 - (samples / 2) as f64) * dk;
                let i = j * samples + s;
                coords[[t, i, 0]] = T::of(wrap_k(k * sin));
                coords[[t, i, 1]] = T::of(wrap_k(k * cos));
                let r = k.abs().max(dk);
                dcf[[t, i]] = T::of(std::f64::consts::PI * r * dk / spokes as f64);
            }
        }
    }
    Trajectory::new(
        coords,
        dcf,
        Readout {
            per_frame: spokes,
            samples,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increments_wrap_at_180() {
        assert!((radial_angle_deg(1, 23.8) - 23.8).abs() < 1e-12);
        assert!((radial_angle_deg(13, 23.8) - 129.4).abs() < 1e-9);
        assert!((radial_angle_deg(8, 23.8) - 10.4).abs() < 1e-9);
    }

    #[test]
    fn spokes_pass_through_dc_with_ramp_weights() {
        let cfg = RadialConfig {
            spokes: 3,
            samples: 8,
            angle_increment: 23.8,
        };
        let tr: Trajectory = radial_trajectory(2, &cfg).unwrap();
        assert_eq!(tr.coords.dim(), (2, 24, 2));
        for j in 0..3 {
            let c = tr.readout_coords(1, j);
            assert_eq!(c[[4, 0]], 0.0);
            assert_eq!(c[[4, 1]], 0.0);
            let w = tr.frame_dcf(1);
            assert_eq!(w[j * 8 + 4], w[j * 8 + 5]);
            assert!((w[j * 8 + 6] / w[j * 8 + 5] - 2.0).abs() < 1e-12);
            assert!((w[j * 8] / w[j * 8 + 5] - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ramp_weights_tile_the_disc() {
        let cfg = RadialConfig {
            spokes: 40,
            samples: 64,
            angle_increment: 180.0 / 40.0,
        };
        let tr: Trajectory = radial_trajectory(1, &cfg).unwrap();
        let total: f64 = tr.dcf.sum();
        let disc = std::f64::consts::PI * 0.25;
        assert!((total - disc).abs() / disc < 0.05, "{total}");
    }

    #[test]
    fn rejects_degenerate_configs() {
        let cfg = RadialConfig {
            spokes: 0,
            ..RadialConfig::default()
        };
        assert!(radial_trajectory::<f64>(2, &cfg).is_err());
    }
}
