pub mod coil;
pub mod error;
pub mod export;
pub mod fft;
pub mod figures;
pub mod interp;
pub mod linalg;
pub mod metrics;
pub mod nufft;
pub mod pipeline;
pub mod recon;
pub mod rng;
pub mod scalar;
pub mod series;
pub mod sim;
pub mod toy;
pub mod traj;
pub mod video;

/// Double-precision complex value.
pub type C64 = num_complex::Complex<f64>;
/// Single-precision complex value, the storage type of `.kfrg` payloads.
pub type C32 = num_complex::Complex<f32>;
pub type MagnitudeSeriesF64 = series::MagnitudeSeries<f64>;
pub type MagnitudeSeriesF32 = series::MagnitudeSeries<f32>;
pub type MultiCoilKSpaceF64 = series::MultiCoilKSpace<f64>;
pub type MultiCoilKSpaceF32 = series::MultiCoilKSpace<f32>;
pub type EncodingOperatorF64 = recon::EncodingOperator<f64>;
pub type EncodingOperatorF32 = recon::EncodingOperator<f32>;
pub type TrajectoryF64 = traj::Trajectory<f64>;
pub type TrajectoryF32 = traj::Trajectory<f32>;
