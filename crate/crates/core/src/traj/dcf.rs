use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::{Error, Result};
use crate::nufft::{NufftParams, NufftPlan};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum DcfMethod {
    /// `|k|` along each readout, for radial spokes through DC.
    Ramp,
    /// Iterative `w ← w / (P w)` with `P` the grid-and-interpolate operator.
    PipeMenon {
        iterations: usize,
    },
    Uniform,
}

impl Default for DcfMethod {
    fn default() -> Self {
        DcfMethod::PipeMenon { iterations: 10 }
    }
}

/// Iterative density weights for one frame of samples, in k-space area units
/// (uniform coverage of the whole square sums to 1).
pub fn pipe_menon<T: Real>(coords: ArrayView2<T>, image_shape: (usize, usize), iterations: usize) -> Result<Array1<T>> {
    let n = coords.nrows();
    if n == 0 {
        return Err(Error::invalid("cannot compensate an empty sample set"));
    }
    let first = coords.row(0);
    if coords.outer_iter().all(|r| r == first) {
        return Err(Error::invalid("degenerate trajectory: all sample locations coincide"));
    }
    let plan = NufftPlan::<T>::new(image_shape.0, image_shape.1, NufftParams::default())?;
    let prep = plan.prepare(coords)?;
    let mut w = vec![1.0; n];
    let mut pw = vec![0.0; n];
    for _ in 0..iterations {
        let grid = plan.spread_real(&prep, &w);
        plan.gather_real(&prep, &grid, &mut pw);
        for (wi, &p) in w.iter_mut().zip(&pw) {
            if p > 0.0 {
                *wi /= p;
            }
        }
    }
    let (gh, gw) = plan.grid_shape();
    let k = plan.kernel();
    let half = k.width as f64 / 2.0;
    let first_tap = (-half).floor() as i64 + 1;
    let s1: f64 = (first_tap..first_tap + k.width as i64)
        .map(|u| k.eval(-(u as f64)))
        .sum();
    let scale = s1.powi(4) / (gh * gw) as f64;
    Ok(w.into_iter().map(|v| T::of(v * scale)).collect())
}

fn ramp<T: Real>(traj: &Trajectory<T>) -> Array2<T> {
    let n = traj.readout.samples;
    let dk = 1.0 / n as f64;
    let per = traj.readout.per_frame as f64;
    traj.coords.map_axis(Axis(2), |c| {
        let r = c[0].as_f64().hypot(c[1].as_f64()).max(dk);
        T::of(std::f64::consts::PI * r * dk / per)
    })
}

/// Replace the density weights of `traj` using `method`.
pub fn density_compensation<T: Real>(
    mut traj: Trajectory<T>,
    method: DcfMethod,
    image_shape: (usize, usize),
) -> Result<Trajectory<T>> {
    match method {
        DcfMethod::Ramp => traj.dcf = ramp(&traj),
        DcfMethod::Uniform => {
            let s = traj.samples_per_frame();
            traj.dcf.fill(T::one() / T::of_usize(s));
        }
        DcfMethod::PipeMenon { iterations } => {
            for t in 0..traj.frames() {
                // Identical frames share weights.
                let prior = (0..t).find(|&p| traj.coords.index_axis(Axis(0), p) == traj.coords.index_axis(Axis(0), t));
                let w = match prior {
                    Some(p) => traj.dcf.index_axis(Axis(0), p).to_owned(),
                    None => pipe_menon(traj.frame_coords(t), image_shape, iterations)?,
                };
                traj.dcf.index_axis_mut(Axis(0), t).assign(&w);
            }
        }
    }
    traj.validate()?;
    Ok(traj)
}
