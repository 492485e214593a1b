//! End-to-end orchestration: configuration, per-video acquisition,
//! undersampling, reconstruction and evaluation.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::coil::{rss_combine, svd_coil_compress};
use crate::error::{Error, Result};
use crate::export::{KfrgArray, KfrgFile, RecordKind};
use crate::metrics::{edge_sharpness, mse, psnr, snr_estimate, ssim, ProfileSpec, QualityReport, Roi, SsimParams};
use crate::nufft::NufftParams;
use crate::recon::{combine_magnitude, cs_temporal_tv, CsConfig, EncodingOperator};
use crate::rng::{derive_seed_str, rng_from_seed};
use crate::series::{MagnitudeSeries, MultiCoilKSpace};
use crate::sim::{simulate, Ellipse, NoiseDraw, SimConfig};
use crate::traj::{
    cartesian_mask, radial_trajectory, spiral_trajectory, CartesianConfig, RadialConfig, SpiralConfig, Trajectory,
};
use crate::video::{downsample_bilinear, RgbVideo};

pub const DEFAULT_CONFIG_FILE: &str = "pipeline.cfg";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingKind {
    /// Every Cartesian line in every frame.
    Full,
    Cartesian,
    Radial,
    Spiral,
}

impl SamplingKind {
    pub const UNDERSAMPLED: [SamplingKind; 3] = [SamplingKind::Cartesian, SamplingKind::Radial, SamplingKind::Spiral];

    pub fn name(self) -> &'static str {
        match self {
            SamplingKind::Full => "full",
            SamplingKind::Cartesian => "cartesian",
            SamplingKind::Radial => "radial",
            SamplingKind::Spiral => "spiral",
        }
    }
}

impl fmt::Display for SamplingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "cartesian" => Ok(Self::Cartesian),
            "radial" => Ok(Self::Radial),
            "spiral" => Ok(Self::Spiral),
            _ => Err(Error::Config(format!(
                "unknown sampling '{s}' (expected full, cartesian, radial or spiral)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Zf,
    Cs,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Zf => "zf",
            Method::Cs => "cs",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zf" => Ok(Self::Zf),
            "cs" => Ok(Self::Cs),
            _ => Err(Error::Config(format!("unknown method '{s}' (expected zf or cs)"))),
        }
    }
}

/// Regions for the reference-free metrics. Metrics whose regions are
/// missing are left empty in reports.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub signal_roi: Option<Roi>,
    pub noise_roi: Option<Roi>,
    pub profile: Option<ProfileSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportConfig {
    pub varnet_window: usize,
    pub unet3d_window: usize,
    pub fastdvdnet_window: usize,
    /// Window stride; 0 uses the window length (no overlap).
    pub stride: usize,
    /// Train / validation / test fractions.
    pub split: [f64; 3],
}

impl Default for ExportConfig {
    fn default() -> Self {
        Self {
            varnet_window: 24,
            unet3d_window: 24,
            fastdvdnet_window: 5,
            stride: 0,
            split: [0.75, 0.10, 0.15],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// One sub-directory of frames per video.
    pub video_dir: PathBuf,
    pub out_dir: PathBuf,
    /// Frames kept per video.
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub virtual_coils: usize,
    pub sim: SimConfig,
    pub cartesian: CartesianConfig,
    pub radial: RadialConfig,
    pub spiral: SpiralConfig,
    pub nufft: NufftParams,
    pub cs: CsConfig,
    pub metrics: MetricsConfig,
    pub export: ExportConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            video_dir: PathBuf::from("videos"),
            out_dir: PathBuf::from("out"),
            frames: 50,
            height: 224,
            width: 224,
            virtual_coils: 10,
            sim: SimConfig::default(),
            cartesian: CartesianConfig::default(),
            radial: RadialConfig::default(),
            spiral: SpiralConfig::default(),
            nufft: NufftParams::default(),
            cs: CsConfig::default(),
            metrics: MetricsConfig::default(),
            export: ExportConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Small 64×64, 24-frame setup with 3 virtual coils and short readouts.
    pub fn toy() -> Self {
        Self {
            frames: 24,
            height: 64,
            width: 64,
            virtual_coils: 3,
            radial: RadialConfig {
                samples: 128,
                ..RadialConfig::default()
            },
            spiral: SpiralConfig {
                samples_per_arm: 128,
                matrix: 64,
                ..SpiralConfig::default()
            },
            export: ExportConfig {
                varnet_window: 12,
                unet3d_window: 12,
                ..ExportConfig::default()
            },
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::Missing(path.to_path_buf()),
            _ => Error::io(path, e),
        })?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.cs.validate()?;
        if self.frames < 2 {
            return Err(Error::Config("frames must be at least 2".into()));
        }
        if self.height < 8 || self.width < 8 {
            return Err(Error::Config(format!(
                "image size {}x{} is below 8x8",
                self.height, self.width
            )));
        }
        if self.virtual_coils == 0 || self.virtual_coils > self.sim.n_coils {
            return Err(Error::Config(format!(
                "virtual_coils must be in 1..={}, got {}",
                self.sim.n_coils, self.virtual_coils
            )));
        }
        let e = &self.export;
        if e.varnet_window == 0 || e.unet3d_window == 0 || e.fastdvdnet_window == 0 {
            return Err(Error::Config("export windows must be at least 1 frame".into()));
        }
        check_fractions(e.split)?;
        if !(self.nufft.oversampling >= 1.0) || self.nufft.kernel_width == 0 {
            return Err(Error::Config(
                "nufft needs oversampling ≥ 1 and kernel_width ≥ 1".into(),
            ));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form without the I/O paths, hex encoded.
    pub fn hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(m) = v.as_object_mut() {
            m.remove("video_dir");
            m.remove("out_dir");
        }
        let bytes = serde_json::to_vec(&v).expect("config serializes");
        hex(&Sha256::digest(&bytes))
    }

    pub fn spiral_for(&self, h: usize, w: usize) -> SpiralConfig {
        SpiralConfig {
            matrix: h.max(w),
            ..self.spiral
        }
    }
}

pub(crate) fn check_fractions(f: [f64; 3]) -> Result<()> {
    if f.iter().any(|v| !(*v >= 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!("split fractions {f:?} must be ≥ 0 and sum to 1")));
    }
    Ok(())
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Seed of the random stream owned by one video.
pub fn video_seed(seed: u64, video_id: &str) -> u64 {
    derive_seed_str(seed, video_id)
}

/// Sorted sub-directories of `dir`, one per video.
pub fn list_videos(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    if !dir.is_dir() {
        return Err(Error::Missing(dir.to_path_buf()));
    }
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        if entry.path().is_dir() {
            out.push((entry.file_name().to_string_lossy().into_owned(), entry.path()));
        }
    }
    out.sort();
    Ok(out)
}

/// Map `f` over `items` on a pool of `jobs` threads. Results keep input order.
pub fn run_parallel<I, O, F>(jobs: usize, items: &[I], f: F) -> Result<Vec<O>>
where
    I: Sync,
    O: Send,
    F: Fn(&I) -> Result<O> + Sync + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| items.par_iter().map(&f).collect())
}

/// Draws and bookkeeping of one simulated acquisition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcquisitionMeta {
    pub video_id: String,
    pub seed: u64,
    pub channels: (usize, usize),
    pub ellipse: Ellipse,
    pub noise: NoiseDraw,
    pub coils_in: usize,
    /// Fraction of k-space energy kept by coil compression.
    pub retained_energy: f64,
    pub config_hash: String,
}

/// Fully sampled, coil-compressed k-space of one video.
#[derive(Debug, Clone, PartialEq)]
pub struct Acquisition {
    pub kspace: MultiCoilKSpace<f32>,
    pub meta: AcquisitionMeta,
}

/// Standardize, simulate and coil-compress one video.
pub fn acquire_video(video: &RgbVideo<f32>, video_id: &str, cfg: &PipelineConfig) -> Result<Acquisition> {
    cfg.validate()?;
    let mut v = video.clone();
    v.truncate(cfg.frames);
    if v.len() < 2 {
        return Err(Error::invalid(format!(
            "video {video_id} has {} frame(s), at least 2 are needed",
            v.len()
        )));
    }
    if v.frame_shape() != (cfg.height, cfg.width) {
        v = downsample_bilinear(&v, cfg.height, cfg.width)?;
    }
    let seed = video_seed(cfg.seed, video_id);
    let mut rng = rng_from_seed(seed);
    let sim = simulate(&v, &cfg.sim, &mut rng)?;
    let coils_in = sim.kspace.n_coils();
    let (kspace, retained_energy) = if cfg.virtual_coils < coils_in {
        let (k, m) = svd_coil_compress(&sim.kspace, cfg.virtual_coils)?;
        (k, m.retained_energy)
    } else {
        (sim.kspace, 1.0)
    };
    Ok(Acquisition {
        kspace,
        meta: AcquisitionMeta {
            video_id: video_id.to_string(),
            seed,
            channels: sim.channels,
            ellipse: sim.ellipse,
            noise: sim.noise,
            coils_in,
            retained_energy,
            config_hash: cfg.hash(),
        },
    })
}

impl Acquisition {
    pub fn to_kfrg(&self) -> Result<KfrgFile> {
        let (t, c, h, w) = self.kspace.dim();
        Ok(KfrgFile {
            kind: RecordKind::FullKspace,
            arrays: vec![KfrgArray::new(
                [t, c, h, w],
                self.kspace.data.iter().copied().collect(),
            )?],
            metadata: serde_json::json!({ "arrays": ["kspace"], "acquisition": self.meta }),
        })
    }

    pub fn from_kfrg(file: &KfrgFile) -> Result<Self> {
        if file.kind != RecordKind::FullKspace || file.arrays.len() != 1 {
            return Err(Error::Format(format!(
                "expected one fully sampled k-space array, found {:?} with {} arrays",
                file.kind,
                file.arrays.len()
            )));
        }
        let meta: AcquisitionMeta = serde_json::from_value(file.metadata["acquisition"].clone())
            .map_err(|e| Error::Format(format!("acquisition metadata: {e}")))?;
        let a = &file.arrays[0];
        let [t, c, h, w] = a.shape();
        let data =
            ndarray::Array4::from_shape_vec((t, c, h, w), a.data.clone()).map_err(|e| Error::shape(e.to_string()))?;
        Ok(Self {
            kspace: MultiCoilKSpace::new(data),
            meta,
        })
    }

    /// RSS magnitude of the fully sampled coil images.
    pub fn reference(&self) -> MagnitudeSeries<f32> {
        rss_combine(&self.kspace.to_images())
    }
}

/// Encoding operator for one sampling scheme on a `frames × h × w` acquisition.
/// The Cartesian mask is drawn from the video's own stream.
pub fn sampling_operator(
    kind: SamplingKind,
    cfg: &PipelineConfig,
    video_id: &str,
    frames: usize,
    (h, w): (usize, usize),
    n_coils: usize,
) -> Result<EncodingOperator<f32>> {
    match kind {
        SamplingKind::Full => EncodingOperator::cartesian(Array2::from_elem((frames, h), true), w, n_coils, None),
        SamplingKind::Cartesian => {
            let mut rng = rng_from_seed(derive_seed_str(video_seed(cfg.seed, video_id), "cartesian-mask"));
            let mask = cartesian_mask(frames, h, &cfg.cartesian.fitted(h), &mut rng)?;
            EncodingOperator::cartesian(mask.mask, w, n_coils, None)
        }
        SamplingKind::Radial | SamplingKind::Spiral => {
            let traj = trajectory(kind, cfg, frames, (h, w))?;
            EncodingOperator::non_cartesian(traj, (h, w), n_coils, None, cfg.nufft)
        }
    }
}

/// The non-Cartesian trajectory of `kind`.
pub fn trajectory(
    kind: SamplingKind,
    cfg: &PipelineConfig,
    frames: usize,
    (h, w): (usize, usize),
) -> Result<Trajectory<f32>> {
    match kind {
        SamplingKind::Radial => radial_trajectory(frames, &cfg.radial),
        SamplingKind::Spiral => spiral_trajectory(frames, &cfg.spiral_for(h, w)),
        _ => Err(Error::invalid(format!("{kind} sampling has no trajectory"))),
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub sampling: SamplingKind,
    pub method: Method,
    pub image: MagnitudeSeries<f32>,
    /// CS objective per outer iteration; empty for zero-filled.
    pub objective: Vec<f64>,
}

pub fn reconstruct(
    acq: &Acquisition,
    sampling: SamplingKind,
    method: Method,
    cfg: &PipelineConfig,
) -> Result<Reconstruction> {
    let (t, c, h, w) = acq.kspace.dim();
    let op = sampling_operator(sampling, cfg, &acq.meta.video_id, t, (h, w), c)?;
    let y = op.acquire_kspace(&acq.kspace)?;
    let (image, objective) = match method {
        Method::Zf => (combine_magnitude(&op.gridding_adjoint(&y)), Vec::new()),
        Method::Cs => {
            let r = cs_temporal_tv(&y, &op, &cfg.cs)?;
            (r.image, r.objective)
        }
    };
    if image.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(format!(
            "{method} reconstruction of {} is not finite",
            acq.meta.video_id
        )));
    }
    Ok(Reconstruction {
        sampling,
        method,
        image,
        objective,
    })
}

/// Fill every metric that the available inputs allow.
pub fn quality_report(
    dataset: &str,
    method: &str,
    pred: &MagnitudeSeries<f32>,
    truth: Option<&MagnitudeSeries<f32>>,
    metrics: &MetricsConfig,
) -> Result<QualityReport> {
    let mut r = QualityReport::new(dataset, method);
    if let Some(truth) = truth {
        r.mse = Some(mse(pred, truth)?);
        r.psnr_db = Some(psnr(pred, truth, None)?);
        r.ssim = Some(ssim(pred, truth, &SsimParams::default())?);
    }
    if let (Some(s), Some(n)) = (&metrics.signal_roi, &metrics.noise_roi) {
        r.snr_db = Some(snr_estimate(pred, s, n)?);
    }
    if let Some(p) = &metrics.profile {
        let es = edge_sharpness(pred, p)?;
        r.es_mean = Some(es.mean);
        r.es_std_t = Some(es.std_t);
    }
    Ok(r)
}

/// Magnitude series as a `T×1×H×W` reconstruction record.
pub fn magnitude_to_kfrg(image: &MagnitudeSeries<f32>, metadata: serde_json::Value) -> Result<KfrgFile> {
    let (t, h, w) = image.dim();
    Ok(KfrgFile {
        kind: RecordKind::Reconstruction,
        arrays: vec![KfrgArray::from_real([t, 1, h, w], image.data.iter().copied())?],
        metadata,
    })
}

pub fn magnitude_from_kfrg(file: &KfrgFile) -> Result<MagnitudeSeries<f32>> {
    if file.kind != RecordKind::Reconstruction || file.arrays.len() != 1 {
        return Err(Error::Format(format!(
            "expected one reconstruction array, found {:?} with {} arrays",
            file.kind,
            file.arrays.len()
        )));
    }
    let a = &file.arrays[0];
    let [t, c, h, w] = a.shape();
    if c != 1 {
        return Err(Error::shape(format!("reconstruction has {c} channels")));
    }
    let data = ndarray::Array3::from_shape_vec((t, h, w), a.real_parts()).map_err(|e| Error::shape(e.to_string()))?;
    Ok(MagnitudeSeries::new(data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toy::toy_video;

    fn small() -> PipelineConfig {
        PipelineConfig {
            frames: 6,
            height: 32,
            width: 32,
            virtual_coils: 3,
            sim: SimConfig {
                n_coils: 6,
                ..SimConfig::default()
            },
            radial: RadialConfig {
                samples: 64,
                ..RadialConfig::default()
            },
            spiral: SpiralConfig {
                samples_per_arm: 64,
                ..SpiralConfig::default()
            },
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn config_toml_roundtrip_and_hash() {
        let cfg = small();
        let text = cfg.to_toml().unwrap();
        let back = PipelineConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.hash().len(), 64);
        let other = PipelineConfig { seed: 1, ..cfg.clone() };
        assert_ne!(other.hash(), cfg.hash());
    }

    #[test]
    fn partial_toml_uses_defaults_and_rejects_unknown_keys() {
        let cfg = PipelineConfig::from_toml("seed = 9\n[cs]\nlambda = 0.001\n").unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.cs.lambda, 0.001);
        assert_eq!(cfg.cs.iterations, 30);
        assert!(matches!(PipelineConfig::from_toml("sed = 9"), Err(Error::Config(_))));
        assert!(matches!(
            PipelineConfig::from_toml("[export]\nsplit = [0.5, 0.5, 0.5]"),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn names_parse() {
        for k in [
            SamplingKind::Full,
            SamplingKind::Cartesian,
            SamplingKind::Radial,
            SamplingKind::Spiral,
        ] {
            assert_eq!(k.name().parse::<SamplingKind>().unwrap(), k);
        }
        assert_eq!("cs".parse::<Method>().unwrap(), Method::Cs);
        assert!("sense".parse::<Method>().is_err());
        assert!("rosette".parse::<SamplingKind>().is_err());
    }

    #[test]
    fn acquisition_is_deterministic_and_roundtrips() {
        let cfg = small();
        let video = toy_video(3, 8, 40, 40).unwrap().cast::<f32>();
        let a = acquire_video(&video, "v3", &cfg).unwrap();
        assert_eq!(a.kspace.dim(), (6, 3, 32, 32));
        let b = acquire_video(&video, "v3", &cfg).unwrap();
        assert_eq!(a, b);
        let c = acquire_video(&video, "v4", &cfg).unwrap();
        assert_ne!(a.meta.seed, c.meta.seed);
        let back = Acquisition::from_kfrg(&a.to_kfrg().unwrap()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn fully_sampled_zero_filled_matches_reference() {
        let cfg = small();
        let video = toy_video(1, 6, 32, 32).unwrap().cast::<f32>();
        let a = acquire_video(&video, "v1", &cfg).unwrap();
        let r = reconstruct(&a, SamplingKind::Full, Method::Zf, &cfg).unwrap();
        let truth = a.reference();
        let q = quality_report("v1", "zf", &r.image, Some(&truth), &cfg.metrics).unwrap();
        assert!(q.ssim.unwrap() > 0.999);
        assert!(q.snr_db.is_none());
    }

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u64> = (0..20).collect();
        let out = run_parallel(3, &items, |&i| Ok(i * i)).unwrap();
        assert_eq!(out, items.iter().map(|i| i * i).collect::<Vec<_>>());
    }
}
