use std::f64::consts::PI;

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};

use super::dcf::{density_compensation, DcfMethod};
use super::radial::wrap_k;
use super::{Readout, Trajectory};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Variable-density spiral interleaves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpiralConfig {
    pub arms: usize,
    /// Undersampling factor near DC.
    pub inner_acceleration: f64,
    /// Undersampling factor at the periphery.
    pub outer_acceleration: f64,
    /// Radius (fraction of k-max) up to which the inner factor holds.
    pub inner_radius: f64,
    /// Radius (fraction of k-max) beyond which the outer factor holds.
    pub outer_radius: f64,
    pub samples_per_arm: usize,
    /// Frames before the interleave pattern repeats.
    pub period: usize,
    /// Image size the sampling density refers to.
    pub matrix: usize,
    pub dcf: DcfMethod,
}

impl Default for SpiralConfig {
    fn default() -> Self {
        Self {
            arms: 15,
            inner_acceleration: 1.1,
            outer_acceleration: 15.0,
            inner_radius: 0.15,
            outer_radius: 0.56,
            samples_per_arm: 512,
            period: 12,
            matrix: 224,
            dcf: DcfMethod::default(),
        }
    }
}

const K_MAX: f64 = 0.5 - 1e-10;

/// One arm sampled at equal arc length, unrotated.
#[derive(Debug, Clone)]
pub struct SpiralArm {
    pub radius: Vec<f64>,
    pub angle: Vec<f64>,
}

impl SpiralConfig {
    fn validate(&self) -> Result<()> {
        if self.arms == 0 || self.samples_per_arm < 2 || self.period == 0 || self.matrix == 0 {
            return Err(Error::invalid(
                "spiral needs arms, period, matrix ≥ 1 and samples_per_arm ≥ 2",
            ));
        }
        if !(self.inner_acceleration > 0.0 && self.outer_acceleration > 0.0) {
            return Err(Error::invalid("spiral accelerations must be positive"));
        }
        if !(0.0 <= self.inner_radius && self.inner_radius < self.outer_radius && self.outer_radius <= 1.0) {
            return Err(Error::invalid(format!(
                "spiral radii must satisfy 0 ≤ inner < outer ≤ 1 (got {}, {})",
                self.inner_radius, self.outer_radius
            )));
        }
        Ok(())
    }

    fn acceleration(&self, r: f64) -> f64 {
        let (r1, r2) = (self.inner_radius * 0.5, self.outer_radius * 0.5);
        let (a1, a2) = (self.inner_acceleration, self.outer_acceleration);
        if r <= r1 {
            a1
        } else if r >= r2 {
            a2
        } else {
            a1 + (a2 - a1) * (r - r1) / (r2 - r1)
        }
    }

    /// Polar angle reached at radius `r`; successive turns of all arms are
    /// `acceleration(r) / matrix` apart.
    fn angle(&self, r: f64) -> f64 {
        let (r1, r2) = (self.inner_radius * 0.5, self.outer_radius * 0.5);
        let (a1, a2) = (self.inner_acceleration, self.outer_acceleration);
        let slope = (a2 - a1) / (r2 - r1);
        let ramp = |x: f64| {
            if slope.abs() < 1e-15 {
                (x - r1) / a1
            } else {
                (self.acceleration(x) / a1).ln() / slope
            }
        };
        let integral = if r <= r1 {
            r / a1
        } else if r <= r2 {
            r1 / a1 + ramp(r)
        } else {
            r1 / a1 + ramp(r2) + (r - r2) / a2
        };
        2.0 * PI * self.matrix as f64 / self.arms as f64 * integral
    }
}

/// Base arm from DC to k-max.
pub fn spiral_arm(cfg: &SpiralConfig) -> Result<SpiralArm> {
    cfg.validate()?;
    const STEPS: usize = 1 << 14;
    let dr = K_MAX / STEPS as f64;
    let speed = |r: f64| {
        let dtheta = 2.0 * PI * cfg.matrix as f64 / (cfg.arms as f64 * cfg.acceleration(r));
        (1.0 + (r * dtheta).powi(2)).sqrt()
    };
    let mut arc = Vec::with_capacity(STEPS + 1);
    arc.push(0.0);
    for i in 0..STEPS {
        let (a, b) = (i as f64 * dr, (i + 1) as f64 * dr);
        let last = arc[i];
        arc.push(last + 0.5 * dr * (speed(a) + speed(b)));
    }
    let total = arc[STEPS];
    let n = cfg.samples_per_arm;
    let mut radius = Vec::with_capacity(n);
    let mut seg = 0;
    for s in 0..n {
        let target = total * s as f64 / (n - 1) as f64;
        while seg < STEPS - 1 && arc[seg + 1] < target {
            seg += 1;
        }
        let frac = ((target - arc[seg]) / (arc[seg + 1] - arc[seg])).clamp(0.0, 1.0);
        radius.push(((seg as f64 + frac) * dr).min(K_MAX));
    }
    radius[n - 1] = K_MAX;
    let angle = radius.iter().map(|&r| cfg.angle(r)).collect();
    Ok(SpiralArm { radius, angle })
}

/// Rotation of arm `j` in frame `t`: arms are `2π/arms` apart and the whole
/// frame advances by `1/period` of that spacing per frame.
pub(crate) fn arm_rotation(cfg: &SpiralConfig, t: usize, j: usize) -> f64 {
    let spacing = 2.0 * PI / cfg.arms as f64;
    spacing * (j as f64 + (t % cfg.period) as f64 / cfg.period as f64)
}

pub fn spiral_trajectory<T: Real>(frames: usize, cfg: &SpiralConfig) -> Result<Trajectory<T>> {
    if frames == 0 {
        return Err(Error::invalid("spiral trajectory needs at least one frame"));
    }
    let arm = spiral_arm(cfg)?;
    let n = cfg.samples_per_arm;
    let s_total = cfg.arms * n;
    let mut coords = Array3::zeros((frames, s_total, 2));
    for t in 0..frames {
        for j in 0..cfg.arms {
            let rot = arm_rotation(cfg, t, j);
            for s in 0..n {
                let (sin, cos) = (arm.angle[s] + rot).sin_cos();
                coords[[t, j * n + s, 0]] = T::of(wrap_k(arm.radius[s] * sin));
                coords[[t, j * n + s, 1]] = T::of(wrap_k(arm.radius[s] * cos));
            }
        }
    }
    let traj = Trajectory::new(
        coords,
        Array2::zeros((frames, s_total)),
        Readout {
            per_frame: cfg.arms,
            samples: n,
        },
    )?;
    density_compensation(traj, cfg.dcf, (cfg.matrix, cfg.matrix))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SpiralConfig {
        SpiralConfig {
            samples_per_arm: 128,
            matrix: 64,
            dcf: DcfMethod::Uniform,
            ..SpiralConfig::default()
        }
    }

    #[test]
    fn arm_spans_dc_to_kmax() {
        let arm = spiral_arm(&SpiralConfig::default()).unwrap();
        assert_eq!(arm.radius[0], 0.0);
        assert!((arm.radius.last().unwrap() - 0.5).abs() < 1e-9);
        assert!(arm.radius.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn turn_spacing_follows_acceleration() {
        let cfg = SpiralConfig::default();
        let dtheta = |r: f64| (cfg.angle(r + 1e-6) - cfg.angle(r - 1e-6)) / 2e-6;
        let spacing = |r: f64| 2.0 * PI / dtheta(r) / cfg.arms as f64 * cfg.matrix as f64;
        assert!((spacing(0.03) - 1.1).abs() < 1e-6);
        assert!((spacing(0.4) - 15.0).abs() < 1e-6);
        let mid = 0.5 * (0.075 + 0.28);
        assert!((spacing(mid) - 8.05).abs() < 1e-6);
    }

    #[test]
    fn samples_are_equally_spaced_along_the_arm() {
        let arm = spiral_arm(&small()).unwrap();
        let pts: Vec<(f64, f64)> = arm
            .radius
            .iter()
            .zip(&arm.angle)
            .map(|(r, a)| (r * a.cos(), r * a.sin()))
            .collect();
        let steps: Vec<f64> = pts
            .windows(2)
            .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
            .collect();
        let mean = steps.iter().sum::<f64>() / steps.len() as f64;
        assert!(steps.iter().all(|s| (s - mean).abs() / mean < 0.02));
    }

    #[test]
    fn periodic_and_rotationally_symmetric() {
        let cfg = small();
        let tr: Trajectory = spiral_trajectory(13, &cfg).unwrap();
        assert_eq!(tr.frame_coords(0), tr.frame_coords(12));
        assert_ne!(tr.frame_coords(0), tr.frame_coords(1));
        let a = 2.0 * PI / 15.0;
        let (base, next) = (tr.readout_coords(3, 0), tr.readout_coords(3, 1));
        for s in 0..cfg.samples_per_arm {
            let (y, x) = (base[[s, 0]], base[[s, 1]]);
            let dy = next[[s, 0]] - (y * a.cos() + x * a.sin());
            let dx = next[[s, 1]] - (x * a.cos() - y * a.sin());
            assert!((dy - dy.round()).abs() < 1e-12 && (dx - dx.round()).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_inverted_radii() {
        let cfg = SpiralConfig {
            inner_radius: 0.6,
            ..SpiralConfig::default()
        };
        assert!(spiral_trajectory::<f64>(1, &cfg).is_err());
    }
}
