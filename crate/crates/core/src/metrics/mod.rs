//! Image-quality metrics and rank statistics.

mod edge;
mod fidelity;
mod report;
mod snr;
mod stats;

pub use edge::{edge_sharpness, profile_values, EdgeSharpness, ProfileSpec};
pub use fidelity::{gaussian_window, mse, psnr, ssim, ssim_frame, SsimParams};
pub use report::{read_reports, write_reports, QualityReport};
pub use snr::{snr_estimate, Roi};
pub use stats::{friedman_nemenyi, midranks, studentized_range_cdf, FriedmanResult};
