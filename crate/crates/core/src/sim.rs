//! Natural video to simulated dynamic multi-coil k-space.
//!
//! The pipeline turns two color channels into a complex object with amplified
//! phase, restricts it to a random ellipse, adds a smooth background phase,
//! weights it with random Gaussian coil sensitivities, adds per-coil noise at a
//! random target SNR and finally transforms every frame to centered k-space.
//! Every random draw comes from the caller's RNG, in a fixed order.

use ndarray::{Array2, Array3, Axis, Zip};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interp::bicubic_resize;
use crate::rng::SimRng;
use crate::scalar::{cis, Real};
use crate::series::{modulate, CoilMapSet, ComplexImageSeries, MultiCoilImageSeries, MultiCoilKSpace};
use crate::video::RgbVideo;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    Gaussian,
    Uniform,
    Off,
}

/// Parameters of the object and acquisition simulation. Ranges are `[low, high]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub phase_scale: f64,
    /// Full long-axis length as a fraction of the image width.
    pub ellipse_long_axis: [f64; 2],
    /// Full short-axis length as a fraction of the image width.
    pub ellipse_short_axis: [f64; 2],
    pub bg_phase_grid: usize,
    pub n_coils: usize,
    pub coil_intensity: [f64; 2],
    /// Per-axis Gaussian standard deviation as a fraction of the image size.
    pub coil_sigma: [f64; 2],
    /// Side of the central box (fraction of the image) that coil centers avoid.
    pub coil_center_exclusion: f64,
    /// Linear amplitude SNR range.
    pub target_snr: [f64; 2],
    pub noise: NoiseModel,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            phase_scale: 4.0,
            ellipse_long_axis: [1.0, 1.4],
            ellipse_short_axis: [0.64, 0.96],
            bg_phase_grid: 6,
            n_coils: 30,
            coil_intensity: [0.1, 1.0],
            coil_sigma: [0.16, 0.5],
            coil_center_exclusion: 0.2,
            target_snr: [12.0, 22.0],
            noise: NoiseModel::Gaussian,
        }
    }
}

fn check_range(name: &str, r: [f64; 2], positive: bool) -> Result<()> {
    if !(r[0].is_finite() && r[1].is_finite()) || r[0] > r[1] || (positive && r[0] <= 0.0) {
        return Err(Error::Config(format!("{name} range {:?} is invalid", r)));
    }
    Ok(())
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        check_range("ellipse_long_axis", self.ellipse_long_axis, true)?;
        check_range("ellipse_short_axis", self.ellipse_short_axis, true)?;
        check_range("coil_intensity", self.coil_intensity, true)?;
        check_range("coil_sigma", self.coil_sigma, true)?;
        check_range("target_snr", self.target_snr, true)?;
        if !self.phase_scale.is_finite() {
            return Err(Error::Config("phase_scale must be finite".into()));
        }
        if self.bg_phase_grid < 2 {
            return Err(Error::Config("bg_phase_grid must be at least 2".into()));
        }
        if self.n_coils == 0 {
            return Err(Error::Config("n_coils must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.coil_center_exclusion) {
            return Err(Error::Config("coil_center_exclusion must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Uniform draw in `[lo, hi)`; returns `lo` for a degenerate range.
fn uniform(rng: &mut SimRng, r: [f64; 2]) -> f64 {
    r[0] + (r[1] - r[0]) * rng.random::<f64>()
}

// ---------------------------------------------------------------------------
// Object

/// Ordered pair of distinct RGB channel indices, uniform over the six choices.
pub fn draw_channel_pair(rng: &mut SimRng) -> (usize, usize) {
    let a = rng.random_range(0..3usize);
    let b = (a + 1 + rng.random_range(0..2usize)) % 3;
    (a, b)
}

/// `z = |a + ib| * exp(i * phase_scale * arg(a + ib))` for the given channels.
pub fn rgb_to_complex_with<T: Real>(
    video: &RgbVideo<T>,
    channels: (usize, usize),
    phase_scale: f64,
) -> ComplexImageSeries<T> {
    let re = video.frames.index_axis(Axis(3), channels.0);
    let im = video.frames.index_axis(Axis(3), channels.1);
    let scale = T::of(phase_scale);
    let mut data = Array3::from_elem(re.dim(), Complex::new(T::zero(), T::zero()));
    Zip::from(&mut data).and(&re).and(&im).for_each(|z, &a, &b| {
        let z0 = Complex::new(a, b);
        *z = Complex::from_polar(z0.norm(), z0.arg() * scale);
    });
    ComplexImageSeries {
        data,
        pixel_spacing_mm: None,
    }
}

pub fn rgb_to_complex<T: Real>(video: &RgbVideo<T>, cfg: &SimConfig, rng: &mut SimRng) -> ComplexImageSeries<T> {
    let pair = draw_channel_pair(rng);
    rgb_to_complex_with(video, pair, cfg.phase_scale)
}

/// Rotated ellipse centered in the image; axes are full lengths in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub rotation: f64,
    pub long_axis: f64,
    pub short_axis: f64,
}

impl Ellipse {
    pub fn draw(cfg: &SimConfig, width: usize, rng: &mut SimRng) -> Self {
        let rotation = std::f64::consts::PI * rng.random::<f64>();
        let long_axis = uniform(rng, cfg.ellipse_long_axis) * width as f64;
        let short_axis = uniform(rng, cfg.ellipse_short_axis) * width as f64;
        Self {
            rotation,
            long_axis,
            short_axis,
        }
    }

    pub fn contains(&self, h: usize, w: usize, y: usize, x: usize) -> bool {
        let dy = y as f64 - (h as f64 - 1.0) / 2.0;
        let dx = x as f64 - (w as f64 - 1.0) / 2.0;
        let (s, c) = self.rotation.sin_cos();
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        let a = self.long_axis / 2.0;
        let b = self.short_axis / 2.0;
        (u / a).powi(2) + (v / b).powi(2) <= 1.0
    }

    pub fn mask(&self, h: usize, w: usize) -> Array2<bool> {
        Array2::from_shape_fn((h, w), |(y, x)| self.contains(h, w, y, x))
    }
}

/// Zero every pixel outside `ellipse`, identically in all frames.
pub fn apply_ellipse<T: Real>(series: &ComplexImageSeries<T>, ellipse: &Ellipse) -> ComplexImageSeries<T> {
    let (_, h, w) = series.dim();
    let mask = ellipse.mask(h, w);
    let mut out = series.clone();
    for mut frame in out.data.axis_iter_mut(Axis(0)) {
        Zip::from(&mut frame).and(&mask).for_each(|v, &inside| {
            if !inside {
                *v = Complex::new(T::zero(), T::zero());
            }
        });
    }
    out
}

pub fn apply_elliptical_mask<T: Real>(
    series: &ComplexImageSeries<T>,
    cfg: &SimConfig,
    rng: &mut SimRng,
) -> (ComplexImageSeries<T>, Ellipse) {
    let ellipse = Ellipse::draw(cfg, series.dim().2, rng);
    (apply_ellipse(series, &ellipse), ellipse)
}

/// `grid×grid` i.i.d. uniform values in `[-pi, pi)`, row-major.
pub fn draw_phase_grid(grid: usize, rng: &mut SimRng) -> Array2<f64> {
    let pi = std::f64::consts::PI;
    Array2::from_shape_simple_fn((grid, grid), || uniform(rng, [-pi, pi]))
}

/// Smooth phase map obtained by bicubic upscaling of a coarse grid.
pub fn phase_field(coarse: &Array2<f64>, h: usize, w: usize) -> Array2<f64> {
    bicubic_resize(coarse.view(), h, w)
}

/// Multiply every frame by `exp(i * phase)`.
pub fn apply_phase<T: Real>(series: &ComplexImageSeries<T>, phase: &Array2<f64>) -> ComplexImageSeries<T> {
    let rot = phase.mapv(|p| cis(T::of(p)));
    let mut out = series.clone();
    for mut frame in out.data.axis_iter_mut(Axis(0)) {
        Zip::from(&mut frame).and(&rot).for_each(|v, &r| *v = *v * r);
    }
    out
}

pub fn add_background_phase<T: Real>(
    series: &ComplexImageSeries<T>,
    cfg: &SimConfig,
    rng: &mut SimRng,
) -> Result<(ComplexImageSeries<T>, Array2<f64>)> {
    let (_, h, w) = series.dim();
    if h < cfg.bg_phase_grid || w < cfg.bg_phase_grid {
        return Err(Error::invalid(format!(
            "image {h}x{w} smaller than the {g}x{g} background phase grid",
            g = cfg.bg_phase_grid
        )));
    }
    let coarse = draw_phase_grid(cfg.bg_phase_grid, rng);
    let phase = phase_field(&coarse, h, w);
    Ok((apply_phase(series, &phase), phase))
}

// ---------------------------------------------------------------------------
// Coils

/// Random parameters of one Gaussian coil.
#[derive(Debug, Clone, PartialEq)]
pub struct CoilParams {
    pub peak: f64,
    pub sigma_y: f64,
    pub sigma_x: f64,
    pub center_y: f64,
    pub center_x: f64,
    pub offset_phase: f64,
    pub phase_grid: Array2<f64>,
}

/// Whether `(y, x)` lies in the central exclusion box of an `h×w` image.
pub fn in_center_box(h: usize, w: usize, exclusion: f64, y: f64, x: f64) -> bool {
    let cy = (h as f64 - 1.0) / 2.0;
    let cx = (w as f64 - 1.0) / 2.0;
    (y - cy).abs() < exclusion * h as f64 / 2.0 && (x - cx).abs() < exclusion * w as f64 / 2.0
}

pub fn draw_coil_params(cfg: &SimConfig, h: usize, w: usize, rng: &mut SimRng) -> Vec<CoilParams> {
    (0..cfg.n_coils)
        .map(|_| {
            let peak = uniform(rng, cfg.coil_intensity);
            let sigma_y = uniform(rng, cfg.coil_sigma) * h as f64;
            let sigma_x = uniform(rng, cfg.coil_sigma) * w as f64;
            let (center_y, center_x) = loop {
                let y = uniform(rng, [-0.5, h as f64 - 0.5]);
                let x = uniform(rng, [-0.5, w as f64 - 0.5]);
                if !in_center_box(h, w, cfg.coil_center_exclusion, y, x) {
                    break (y, x);
                }
            };
            let offset_phase = uniform(rng, [-std::f64::consts::PI, std::f64::consts::PI]);
            let phase_grid = draw_phase_grid(cfg.bg_phase_grid, rng);
            CoilParams {
                peak,
                sigma_y,
                sigma_x,
                center_y,
                center_x,
                offset_phase,
                phase_grid,
            }
        })
        .collect()
}

/// Build raw Gaussian coil maps and normalize them by their root-sum-of-squares.
pub fn coil_maps_from_params<T: Real>(params: &[CoilParams], h: usize, w: usize) -> CoilMapSet<T> {
    let c = params.len();
    let mut raw = Array3::from_elem((c, h, w), Complex::new(0.0f64, 0.0));
    for (p, mut map) in params.iter().zip(raw.axis_iter_mut(Axis(0))) {
        let phase = phase_field(&p.phase_grid, h, w);
        for ((y, x), v) in map.indexed_iter_mut() {
            let dy = y as f64 - p.center_y;
            let dx = x as f64 - p.center_x;
            let g =
                p.peak * (-(dy * dy) / (2.0 * p.sigma_y * p.sigma_y) - (dx * dx) / (2.0 * p.sigma_x * p.sigma_x)).exp();
            *v = Complex::from_polar(g, p.offset_phase + phase[[y, x]]);
        }
    }
    let rss = raw.map_axis(Axis(0), |v| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
    let mut maps = Array3::from_elem((c, h, w), Complex::new(T::zero(), T::zero()));
    for (mut out, map) in maps.axis_iter_mut(Axis(0)).zip(raw.axis_iter(Axis(0))) {
        Zip::from(&mut out).and(&map).and(&rss).for_each(|o, &m, &r| {
            let v = m / r;
            *o = Complex::new(T::of(v.re), T::of(v.im));
        });
    }
    CoilMapSet { maps }
}

pub fn generate_coil_maps<T: Real>(cfg: &SimConfig, h: usize, w: usize, rng: &mut SimRng) -> Result<CoilMapSet<T>> {
    if h < 10 || w < 10 {
        return Err(Error::invalid(format!(
            "coil maps need at least 10x10 pixels, got {h}x{w}"
        )));
    }
    let params = draw_coil_params(cfg, h, w, rng);
    Ok(coil_maps_from_params(&params, h, w))
}

pub fn apply_coil_maps<T: Real>(
    series: &ComplexImageSeries<T>,
    coils: &CoilMapSet<T>,
) -> Result<MultiCoilImageSeries<T>> {
    let (_, h, w) = series.dim();
    if coils.image_shape() != (h, w) {
        return Err(Error::shape(format!(
            "coil maps are {:?}, object is {h}x{w}",
            coils.image_shape()
        )));
    }
    Ok(MultiCoilImageSeries::new(modulate(&series.data, &coils.maps)))
}

// ---------------------------------------------------------------------------
// Noise and k-space

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseDraw {
    /// Drawn linear target SNR.
    pub snr: f64,
    /// Per-component noise standard deviation.
    pub sigma: f64,
}

/// Mean magnitude over nonzero entries; `None` if every entry is zero.
pub fn mean_nonzero_magnitude<T: Real>(mc: &MultiCoilImageSeries<T>) -> Option<f64> {
    let (sum, n) = mc.data.iter().fold((0.0f64, 0usize), |(s, n), v| {
        let m = v.norm().as_f64();
        if m > 0.0 {
            (s + m, n + 1)
        } else {
            (s, n)
        }
    });
    (n > 0).then(|| sum / n as f64)
}

/// Add independent noise to every coil, frame and pixel at a random target SNR.
pub fn add_noise<T: Real>(
    mc: &MultiCoilImageSeries<T>,
    cfg: &SimConfig,
    rng: &mut SimRng,
) -> Result<(MultiCoilImageSeries<T>, NoiseDraw)> {
    let snr = uniform(rng, cfg.target_snr);
    let mean =
        mean_nonzero_magnitude(mc).ok_or_else(|| Error::invalid("cannot set a noise level for an all-zero signal"))?;
    let sigma = mean / snr;
    let draw = NoiseDraw { snr, sigma };
    let mut out = mc.clone();
    match cfg.noise {
        NoiseModel::Off => {}
        NoiseModel::Gaussian => {
            for v in out.data.iter_mut() {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *v += Complex::new(T::of(re * sigma), T::of(im * sigma));
            }
        }
        NoiseModel::Uniform => {
            let half = 3f64.sqrt() * sigma;
            for v in out.data.iter_mut() {
                let re = uniform(rng, [-half, half]);
                let im = uniform(rng, [-half, half]);
                *v += Complex::new(T::of(re), T::of(im));
            }
        }
    }
    Ok((out, draw))
}

/// Centered orthonormal FFT of every frame and coil.
pub fn fft2_forward<T: Real>(mc: &MultiCoilImageSeries<T>) -> MultiCoilKSpace<T> {
    mc.to_kspace()
}

// ---------------------------------------------------------------------------
// Full pipeline

/// Every intermediate of one simulated dataset.
#[derive(Debug, Clone)]
pub struct Simulation<T: Real = f64> {
    /// Noise-free complex object.
    pub object: ComplexImageSeries<T>,
    pub coils: CoilMapSet<T>,
    pub channels: (usize, usize),
    pub ellipse: Ellipse,
    pub noise: NoiseDraw,
    /// Noisy, fully sampled multi-coil k-space.
    pub kspace: MultiCoilKSpace<T>,
}

/// Run the whole object and acquisition simulation on a standardized video.
pub fn simulate<T: Real>(video: &RgbVideo<T>, cfg: &SimConfig, rng: &mut SimRng) -> Result<Simulation<T>> {
    cfg.validate()?;
    let (h, w) = video.frame_shape();
    let channels = draw_channel_pair(rng);
    let object = rgb_to_complex_with(video, channels, cfg.phase_scale);
    let (object, ellipse) = apply_elliptical_mask(&object, cfg, rng);
    let (object, _) = add_background_phase(&object, cfg, rng)?;
    let coils = generate_coil_maps::<T>(cfg, h, w, rng)?;
    let clean = apply_coil_maps(&object, &coils)?;
    let (noisy, noise) = add_noise(&clean, cfg, rng)?;
    let kspace = fft2_forward(&noisy);
    if !kspace.is_finite() {
        return Err(Error::Numerical("simulated k-space contains non-finite values".into()));
    }
    Ok(Simulation {
        object,
        coils,
        channels,
        ellipse,
        noise,
        kspace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use ndarray::Array4;

    fn video(t: usize, h: usize, w: usize, seed: u64) -> RgbVideo<f64> {
        let mut rng = rng_from_seed(seed);
        let frames = Array4::from_shape_simple_fn((t, h, w, 3), || rng.random::<f64>());
        RgbVideo::new(frames, "rand").unwrap()
    }

    #[test]
    fn phase_scaling_examples() {
        let mut frames = Array4::zeros((1, 1, 2, 3));
        frames[[0, 0, 0, 0]] = 0.6;
        frames[[0, 0, 1, 0]] = 0.3;
        frames[[0, 0, 1, 1]] = 0.3;
        let v = RgbVideo::new(frames, "px").unwrap();
        let z = rgb_to_complex_with(&v, (0, 1), 4.0);
        assert!((z.data[[0, 0, 0]] - Complex::new(0.6, 0.0)).norm() < 1e-15);
        let expected = -(0.18f64).sqrt();
        assert!((z.data[[0, 0, 1]].re - expected).abs() < 1e-12);
        assert!(z.data[[0, 0, 1]].im.abs() < 1e-12);
    }

    #[test]
    fn channel_pairs_are_distinct_and_reproducible() {
        let mut seen = std::collections::HashSet::new();
        let mut rng = rng_from_seed(5);
        for _ in 0..200 {
            let (a, b) = draw_channel_pair(&mut rng);
            assert_ne!(a, b);
            seen.insert((a, b));
        }
        assert_eq!(seen.len(), 6);
        assert_eq!(
            draw_channel_pair(&mut rng_from_seed(11)),
            draw_channel_pair(&mut rng_from_seed(11))
        );
    }

    #[test]
    fn ellipse_zeroes_corners_keeps_center() {
        let cfg = SimConfig::default();
        let v = video(2, 224, 224, 1);
        let obj = rgb_to_complex(&v, &cfg, &mut rng_from_seed(0));
        for seed in 0..50 {
            let (masked, _) = apply_elliptical_mask(&obj, &cfg, &mut rng_from_seed(seed));
            for t in 0..2 {
                for &(y, x) in &[(0, 0), (0, 223), (223, 0), (223, 223)] {
                    assert_eq!(masked.data[[t, y, x]], Complex::new(0.0, 0.0));
                }
                assert_eq!(masked.data[[t, 112, 112]], obj.data[[t, 112, 112]]);
            }
        }
        let zero = ComplexImageSeries::<f64>::zeros(1, 16, 16);
        let (z, _) = apply_elliptical_mask(&zero, &cfg, &mut rng_from_seed(2));
        assert!(z.data.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn corners_outside_every_admissible_ellipse() {
        // Corner pixel centers sit farther from the center than the largest
        // admissible semi-axis, so no rotation or axis draw can include them.
        let w = 224usize;
        let corner_dist = ((w as f64 - 1.0) / 2.0) * 2f64.sqrt();
        let max_semi = 1.4 * w as f64 / 2.0;
        assert!(corner_dist > max_semi);
        let e = Ellipse {
            rotation: std::f64::consts::FRAC_PI_4,
            long_axis: 1.4 * w as f64,
            short_axis: 0.96 * w as f64,
        };
        assert!(!e.contains(w, w, 0, 0));
        assert!(!e.contains(w, w, w - 1, w - 1));
    }

    #[test]
    fn background_phase_preserves_magnitude() {
        let cfg = SimConfig::default();
        let v = video(3, 32, 40, 2);
        let obj = rgb_to_complex(&v, &cfg, &mut rng_from_seed(0));
        let (out, _) = add_background_phase(&obj, &cfg, &mut rng_from_seed(3)).unwrap();
        for (a, b) in out.data.iter().zip(obj.data.iter()) {
            let (ma, mb) = (a.norm(), b.norm());
            assert!((ma - mb).abs() <= 1e-9 * mb.max(1e-300));
        }
        let zero_phase = apply_phase(&obj, &Array2::zeros((32, 40)));
        assert_eq!(zero_phase, obj);
        let small = ComplexImageSeries::<f64>::zeros(1, 5, 8);
        assert!(add_background_phase(&small, &cfg, &mut rng_from_seed(0)).is_err());
    }

    #[test]
    fn coil_maps_normalized() {
        let cfg = SimConfig::default();
        let maps = generate_coil_maps::<f64>(&cfg, 48, 40, &mut rng_from_seed(9)).unwrap();
        assert_eq!(maps.n_coils(), 30);
        for r in maps.rss().iter() {
            assert!((r - 1.0).abs() < 1e-6);
        }
        let one = SimConfig {
            n_coils: 1,
            ..SimConfig::default()
        };
        let m1 = generate_coil_maps::<f64>(&one, 16, 16, &mut rng_from_seed(1)).unwrap();
        assert!(m1.maps.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));
        assert!(generate_coil_maps::<f64>(&cfg, 9, 30, &mut rng_from_seed(1)).is_err());
    }

    #[test]
    fn coil_application() {
        let cfg = SimConfig::default();
        let v = video(2, 20, 24, 4);
        let obj = rgb_to_complex(&v, &cfg, &mut rng_from_seed(0));
        let maps = generate_coil_maps::<f64>(&cfg, 20, 24, &mut rng_from_seed(1)).unwrap();
        let mc = apply_coil_maps(&obj, &maps).unwrap();
        for t in 0..2 {
            for y in 0..20 {
                for x in 0..24 {
                    let rss: f64 = (0..30).map(|c| mc.data[[t, c, y, x]].norm_sqr()).sum::<f64>().sqrt();
                    assert!((rss - obj.data[[t, y, x]].norm()).abs() < 1e-6);
                }
            }
        }
        let unit = CoilMapSet {
            maps: Array3::from_elem((1, 20, 24), Complex::new(1.0, 0.0)),
        };
        let same = apply_coil_maps(&obj, &unit).unwrap();
        assert_eq!(same.data.index_axis(Axis(1), 0), obj.data);
        let zero = ComplexImageSeries::<f64>::zeros(2, 20, 24);
        assert!(apply_coil_maps(&zero, &maps)
            .unwrap()
            .data
            .iter()
            .all(|v| v.norm() == 0.0));
        let wrong = generate_coil_maps::<f64>(&cfg, 20, 20, &mut rng_from_seed(1)).unwrap();
        assert!(apply_coil_maps(&obj, &wrong).is_err());
    }

    #[test]
    fn noise_model_switches() {
        let mc = MultiCoilImageSeries::new(Array4::from_elem((2, 3, 8, 8), Complex::new(1.0, 0.0)));
        let off = SimConfig {
            noise: NoiseModel::Off,
            ..SimConfig::default()
        };
        let (same, draw) = add_noise(&mc, &off, &mut rng_from_seed(1)).unwrap();
        assert_eq!(same, mc);
        assert!((12.0..=22.0).contains(&draw.snr));

        let (noisy, _) = add_noise(&mc, &SimConfig::default(), &mut rng_from_seed(1)).unwrap();
        // Two coils at the same pixel and frame see different noise.
        assert_ne!(noisy.data[[0, 0, 3, 3]], noisy.data[[0, 1, 3, 3]]);
        assert_ne!(noisy.data[[0, 0, 3, 3]], noisy.data[[1, 0, 3, 3]]);

        let zero = MultiCoilImageSeries::new(Array4::from_elem((1, 1, 4, 4), Complex::new(0.0, 0.0)));
        assert!(add_noise(&zero, &SimConfig::default(), &mut rng_from_seed(1)).is_err());
    }

    #[test]
    fn uniform_noise_has_target_std() {
        let mc = MultiCoilImageSeries::new(Array4::from_elem((4, 4, 32, 32), Complex::new(2.0, 0.0)));
        let cfg = SimConfig {
            noise: NoiseModel::Uniform,
            ..SimConfig::default()
        };
        let (noisy, draw) = add_noise(&mc, &cfg, &mut rng_from_seed(3)).unwrap();
        let n = noisy.data.len() as f64;
        let var: f64 = noisy.data.iter().map(|v| (v.re - 2.0f64).powi(2)).sum::<f64>() / n;
        assert!((var.sqrt() / draw.sigma - 1.0).abs() < 0.03);
        assert!((draw.sigma - 2.0 / draw.snr).abs() < 1e-12);
    }

    #[test]
    fn full_simulation_is_deterministic() {
        let cfg = SimConfig {
            n_coils: 4,
            ..SimConfig::default()
        };
        let v = video(3, 16, 16, 8);
        let a = simulate(&v, &cfg, &mut rng_from_seed(42)).unwrap();
        let b = simulate(&v, &cfg, &mut rng_from_seed(42)).unwrap();
        assert_eq!(a.kspace, b.kspace);
        assert_eq!(a.kspace.dim(), (3, 4, 16, 16));
        let c = simulate(&v, &cfg, &mut rng_from_seed(43)).unwrap();
        assert_ne!(a.kspace, c.kspace);
    }
}
