//! Zero-filled and temporal-TV compressed-sensing reconstruction.

mod cs;
mod operator;

pub use cs::{cs_temporal_tv, temporal_tv_objective, CsConfig, CsResult};
pub use operator::{EncodingOperator, Sampling};

use ndarray::Array4;
use num_complex::Complex;

use crate::coil::rss_of;
use crate::error::Result;
use crate::scalar::Real;
use crate::series::{ComplexImageSeries, MagnitudeSeries, MultiCoilImageSeries};

/// Density-weighted adjoint: per-coil images, or one SENSE-combined channel when
/// the operator carries coil maps.
pub fn zero_filled<T: Real>(
    y: &ndarray::Array3<Complex<T>>,
    op: &EncodingOperator<T>,
) -> Result<MultiCoilImageSeries<T>> {
    op.check_data(y)?;
    Ok(MultiCoilImageSeries::new(op.gridding_adjoint(y)))
}

/// Magnitude of an image-space estimate: `|x|` for one channel, RSS otherwise.
pub fn combine_magnitude<T: Real>(x: &Array4<Complex<T>>) -> MagnitudeSeries<T> {
    MagnitudeSeries::new(rss_of(x))
}

/// The single complex channel of a SENSE-combined estimate.
pub fn combined_complex<T: Real>(x: &MultiCoilImageSeries<T>) -> Result<ComplexImageSeries<T>> {
    if x.n_coils() != 1 {
        return Err(crate::error::Error::shape(format!(
            "expected one combined channel, got {}",
            x.n_coils()
        )));
    }
    ComplexImageSeries::new(x.data.index_axis(ndarray::Axis(1), 0).to_owned())
}
