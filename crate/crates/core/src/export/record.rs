//! Training records built from simulated acquisitions.

use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array3, Array4, Axis};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::kfrg::{KfrgArray, KfrgFile, RecordKind};
use crate::coil::estimate_sensitivities;
use crate::error::{Error, Result};
use crate::pipeline::{sampling_operator, Acquisition, PipelineConfig, SamplingKind};
use crate::recon::{combine_magnitude, Sampling};
use crate::series::MultiCoilKSpace;
use crate::sim::NoiseDraw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    Varnet,
    Unet3d,
    Fastdvdnet,
}

impl Arch {
    pub const ALL: [Arch; 3] = [Arch::Varnet, Arch::Unet3d, Arch::Fastdvdnet];

    pub fn name(self) -> &'static str {
        match self {
            Arch::Varnet => "varnet",
            Arch::Unet3d => "unet3d",
            Arch::Fastdvdnet => "fastdvdnet",
        }
    }

    pub fn kind(self) -> RecordKind {
        match self {
            Arch::Varnet => RecordKind::CartesianKspace,
            Arch::Unet3d => RecordKind::GriddedComplex,
            Arch::Fastdvdnet => RecordKind::MagnitudeFrames,
        }
    }

    pub fn sampling(self) -> SamplingKind {
        match self {
            Arch::Varnet => SamplingKind::Cartesian,
            Arch::Unet3d => SamplingKind::Radial,
            Arch::Fastdvdnet => SamplingKind::Spiral,
        }
    }

    pub fn window(self, cfg: &PipelineConfig) -> usize {
        match self {
            Arch::Varnet => cfg.export.varnet_window,
            Arch::Unet3d => cfg.export.unet3d_window,
            Arch::Fastdvdnet => cfg.export.fastdvdnet_window,
        }
    }

    /// Names of the stored arrays, inputs first and the target last.
    pub fn array_names(self) -> &'static [&'static str] {
        match self {
            Arch::Varnet => &["kspace", "mask", "sensitivities", "initializer", "target"],
            Arch::Unet3d => &["images", "target"],
            Arch::Fastdvdnet => &["frames", "target"],
        }
    }
}

impl fmt::Display for Arch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Arch::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| {
            Error::Config(format!(
                "unknown architecture '{s}' (expected varnet, unet3d or fastdvdnet)"
            ))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub video_id: String,
    pub arch: Arch,
    pub window_index: usize,
    /// First frame of the window in the standardized video.
    pub start: usize,
    pub frames: usize,
    /// Seed of the video's random stream.
    pub seed: u64,
    pub noise: NoiseDraw,
    pub trajectory: String,
    pub config_hash: String,
    pub arrays: Vec<String>,
}

/// Network inputs plus a magnitude target.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetRecord {
    pub kind: RecordKind,
    pub inputs: Vec<KfrgArray>,
    /// `T×1×H×W` magnitude, stored as complex with zero imaginary part.
    pub target: KfrgArray,
    pub meta: RecordMeta,
}

impl DatasetRecord {
    pub fn to_kfrg(&self) -> Result<KfrgFile> {
        let mut arrays = self.inputs.clone();
        arrays.push(self.target.clone());
        let metadata = serde_json::to_value(&self.meta).map_err(|e| Error::Format(e.to_string()))?;
        Ok(KfrgFile {
            kind: self.kind,
            arrays,
            metadata,
        })
    }

    pub fn from_kfrg(file: &KfrgFile) -> Result<Self> {
        let meta: RecordMeta = serde_json::from_value(file.metadata.clone())
            .map_err(|e| Error::Format(format!("record metadata: {e}")))?;
        if meta.arch.kind() != file.kind {
            return Err(Error::Format(format!("{} record stored as {:?}", meta.arch, file.kind)));
        }
        let names = meta.arch.array_names();
        if file.arrays.len() != names.len() || meta.arrays.len() != names.len() {
            return Err(Error::Format(format!(
                "{} record needs {} arrays, found {}",
                meta.arch,
                names.len(),
                file.arrays.len()
            )));
        }
        let mut inputs = file.arrays.clone();
        let target = inputs.pop().expect("at least one array");
        Ok(Self {
            kind: file.kind,
            inputs,
            target,
            meta,
        })
    }

    pub fn input(&self, name: &str) -> Option<&KfrgArray> {
        let i = self.meta.arch.array_names().iter().position(|n| *n == name)?;
        self.inputs.get(i)
    }
}

/// Window starts tiling `frames` with windows of `window` frames every
/// `stride` frames (0 means `stride = window`).
pub fn window_starts(frames: usize, window: usize, stride: usize) -> Result<Vec<usize>> {
    if window == 0 {
        return Err(Error::invalid("window must be at least one frame"));
    }
    if frames < window {
        return Err(Error::invalid(format!(
            "video has {frames} frames, shorter than the required {window}-frame window"
        )));
    }
    let stride = if stride == 0 { window } else { stride };
    Ok((0..=frames - window).step_by(stride).collect())
}

fn array4(a: &Array4<Complex<f32>>) -> Result<KfrgArray> {
    let (t, c, h, w) = a.dim();
    KfrgArray::new([t, c, h, w], a.iter().copied().collect())
}

fn real3(a: &Array3<f32>) -> Result<KfrgArray> {
    let (t, h, w) = a.dim();
    KfrgArray::from_real([t, 1, h, w], a.iter().copied())
}

/// Build every window of `arch` from one acquisition.
pub fn build_records(acq: &Acquisition, cfg: &PipelineConfig, arch: Arch) -> Result<Vec<DatasetRecord>> {
    let (t, c, h, w) = acq.kspace.dim();
    let window = arch.window(cfg);
    let starts = window_starts(t, window, cfg.export.stride)
        .map_err(|e| Error::invalid(format!("{} ({arch}): {e}", acq.meta.video_id)))?;
    let op = sampling_operator(arch.sampling(), cfg, &acq.meta.video_id, t, (h, w), c)?;
    let y = op.acquire_kspace(&acq.kspace)?;
    let reference = acq.reference();
    let trajectory = match arch.sampling() {
        SamplingKind::Cartesian => format!("cartesian/{}", acq.meta.video_id),
        SamplingKind::Radial => format!(
            "radial/{}x{}/{}deg",
            cfg.radial.spokes, cfg.radial.samples, cfg.radial.angle_increment
        ),
        s => format!("{s}/{}x{}", cfg.spiral.arms, cfg.spiral.samples_per_arm),
    };
    let meta = |i: usize, start: usize| RecordMeta {
        video_id: acq.meta.video_id.clone(),
        arch,
        window_index: i,
        start,
        frames: window,
        seed: acq.meta.seed,
        noise: acq.meta.noise,
        trajectory: trajectory.clone(),
        config_hash: cfg.hash(),
        arrays: arch.array_names().iter().map(|s| s.to_string()).collect(),
    };
    let mut out = Vec::with_capacity(starts.len());
    match arch {
        Arch::Varnet => {
            let Sampling::Cartesian(mask) = op.sampling() else {
                unreachable!("varnet uses Cartesian sampling")
            };
            let zf = op.gridding_adjoint(&y);
            let full = acq.kspace.to_images();
            for (i, &s0) in starts.iter().enumerate() {
                let win = s![s0..s0 + window, .., .., ..];
                let mwin = mask.slice(s![s0..s0 + window, ..]);
                let mut ksp = acq.kspace.data.slice(win).to_owned();
                for (mut frame, m) in ksp.axis_iter_mut(Axis(0)).zip(mwin.outer_iter()) {
                    for (line, &keep) in m.iter().enumerate() {
                        if !keep {
                            frame.slice_mut(s![.., line, ..]).fill(Complex::new(0.0, 0.0));
                        }
                    }
                }
                let sens = estimate_sensitivities(&MultiCoilKSpace::new(ksp.clone()), Some(mwin))?
                    .maps
                    .maps;
                let combine = |x: ndarray::ArrayView4<Complex<f32>>| {
                    Array4::from_shape_fn((window, 1, h, w), |(f, _, yy, xx)| {
                        (0..c)
                            .map(|k| x[[f, k, yy, xx]] * sens[[k, yy, xx]].conj())
                            .sum::<Complex<f32>>()
                    })
                };
                let init = combine(zf.slice(win));
                let target = combine(full.data.slice(win)).mapv(|v| v.norm());
                let (_, _, th, tw) = target.dim();
                out.push(DatasetRecord {
                    kind: arch.kind(),
                    inputs: vec![
                        array4(&ksp)?,
                        KfrgArray::from_real([window, 1, h, 1], mwin.iter().map(|&m| f32::from(u8::from(m))))?,
                        array4(&sens.insert_axis(Axis(0)))?,
                        array4(&init)?,
                    ],
                    target: KfrgArray::from_real([window, 1, th, tw], target.iter().copied())?,
                    meta: meta(i, s0),
                });
            }
        }
        Arch::Unet3d => {
            let zf = op.gridding_adjoint(&y);
            for (i, &s0) in starts.iter().enumerate() {
                out.push(DatasetRecord {
                    kind: arch.kind(),
                    inputs: vec![array4(&zf.slice(s![s0..s0 + window, .., .., ..]).to_owned())?],
                    target: real3(&reference.data.slice(s![s0..s0 + window, .., ..]).to_owned())?,
                    meta: meta(i, s0),
                });
            }
        }
        Arch::Fastdvdnet => {
            let zf = combine_magnitude(&op.gridding_adjoint(&y));
            for (i, &s0) in starts.iter().enumerate() {
                let last = s0 + window - 1;
                out.push(DatasetRecord {
                    kind: arch.kind(),
                    inputs: vec![real3(&zf.data.slice(s![s0..s0 + window, .., ..]).to_owned())?],
                    target: real3(&reference.data.slice(s![last..last + 1, .., ..]).to_owned())?,
                    meta: meta(i, s0),
                });
            }
        }
    }
    Ok(out)
}
