//! Undersampling schemes: variable-density Cartesian line masks, tiny-golden-angle
//! radial spokes and variable-density spiral interleaves.
//!
//! Non-Cartesian coordinates are `(k_y, k_x)` in cycles per pixel, inside
//! `[-0.5, 0.5)`, matching [`crate::nufft`].

mod cartesian;
mod dcf;
mod io;
mod radial;
mod spiral;

use ndarray::{s, Array2, Array3, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub use cartesian::{cartesian_mask, center_lines, random_band, CartesianConfig, CartesianMask};
pub use dcf::{density_compensation, pipe_menon, DcfMethod};
pub use io::{
    decode_mask, decode_trajectory, encode_mask, encode_trajectory, read_mask, read_trajectory, write_mask,
    write_trajectory,
};
pub use radial::{radial_angle_deg, radial_trajectory, RadialConfig};
pub use spiral::{spiral_arm, spiral_trajectory, SpiralArm, SpiralConfig};

/// How samples within a frame group into readouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Readout {
    /// Spokes or arms per frame.
    pub per_frame: usize,
    /// Samples along each spoke or arm.
    pub samples: usize,
}

/// Per-frame non-Cartesian sample locations and density weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<T: Real = f64> {
    /// `T×S×2`, columns `(k_y, k_x)`.
    pub coords: Array3<T>,
    /// `T×S`, nonnegative, in units of k-space area (cycles²/pixel²).
    pub dcf: Array2<T>,
    pub readout: Readout,
}

impl<T: Real> Trajectory<T> {
    pub fn new(coords: Array3<T>, dcf: Array2<T>, readout: Readout) -> Result<Self> {
        let (t, s, two) = coords.dim();
        if two != 2 {
            return Err(Error::shape(format!(
                "coordinates must be T×S×2, got {:?}",
                coords.dim()
            )));
        }
        if dcf.dim() != (t, s) {
            return Err(Error::shape(format!("dcf is {:?}, expected {t}x{s}", dcf.dim())));
        }
        if readout.per_frame * readout.samples != s {
            return Err(Error::shape(format!(
                "readout {}x{} does not cover {s} samples",
                readout.per_frame, readout.samples
            )));
        }
        let traj = Self { coords, dcf, readout };
        traj.validate()?;
        Ok(traj)
    }

    pub fn validate(&self) -> Result<()> {
        let half = T::of(0.5);
        if let Some(v) = self.coords.iter().find(|&&v| !(v >= -half && v < half)) {
            return Err(Error::invalid(format!("coordinate {v} outside [-0.5, 0.5)")));
        }
        if self.dcf.iter().any(|&d| !(d.is_finite() && d >= T::zero())) {
            return Err(Error::invalid("density weights must be finite and nonnegative"));
        }
        Ok(())
    }

    pub fn frames(&self) -> usize {
        self.coords.dim().0
    }

    pub fn samples_per_frame(&self) -> usize {
        self.coords.dim().1
    }

    pub fn frame_coords(&self, t: usize) -> ArrayView2<'_, T> {
        self.coords.index_axis(Axis(0), t)
    }

    pub fn frame_dcf(&self, t: usize) -> ArrayView1<'_, T> {
        self.dcf.index_axis(Axis(0), t)
    }

    /// Coordinates of readout `j` of frame `t` (`samples×2`).
    pub fn readout_coords(&self, t: usize, j: usize) -> ArrayView2<'_, T> {
        let n = self.readout.samples;
        self.coords.slice(s![t, j * n..(j + 1) * n, ..])
    }

    /// Frames `start..start + len`, wrapping around when the trajectory is shorter.
    pub fn window(&self, start: usize, len: usize) -> Self {
        let n = self.frames();
        let (s_, _) = (self.samples_per_frame(), ());
        let mut coords = Array3::zeros((len, s_, 2));
        let mut dcf = Array2::zeros((len, s_));
        for i in 0..len {
            let src = (start + i) % n;
            coords
                .index_axis_mut(Axis(0), i)
                .assign(&self.coords.index_axis(Axis(0), src));
            dcf.index_axis_mut(Axis(0), i)
                .assign(&self.dcf.index_axis(Axis(0), src));
        }
        Self {
            coords,
            dcf,
            readout: self.readout,
        }
    }

    pub fn cast<U: Real>(&self) -> Trajectory<U> {
        Trajectory {
            coords: self.coords.mapv(|v| U::of(v.as_f64())),
            dcf: self.dcf.mapv(|v| U::of(v.as_f64())),
            readout: self.readout,
        }
    }
}
