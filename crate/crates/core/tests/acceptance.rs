//! Acceptance suite: one PASS/FAIL line per criterion, pinned tolerances.
//! Runs sequentially so that the reported runtimes are meaningful.

use std::f64::consts::PI;
use std::time::Instant;

use kforge::export::{decode_kfrg, encode_kfrg, KfrgArray, KfrgFile, RecordKind};
use kforge::metrics::{friedman_nemenyi, gaussian_window, mse, psnr, ssim, SsimParams};
use kforge::nufft::{NufftParams, NufftPlan};
use kforge::pipeline::{acquire_video, reconstruct, run_parallel, Method, PipelineConfig, SamplingKind};
use kforge::recon::{cs_temporal_tv, zero_filled, CsConfig, EncodingOperator};
use kforge::rng::{derive_seed, rng_from_seed};
use kforge::series::{MagnitudeSeries, MultiCoilImageSeries};
use kforge::sim::{
    add_background_phase, add_noise, apply_coil_maps, apply_elliptical_mask, draw_channel_pair, generate_coil_maps,
    mean_nonzero_magnitude, rgb_to_complex_with, SimConfig,
};
use kforge::toy::toy_video;
use kforge::traj::{
    cartesian_mask, center_lines, radial_angle_deg, radial_trajectory, random_band, spiral_trajectory, CartesianConfig,
    RadialConfig, SpiralConfig, Trajectory,
};
use ndarray::{Array2, Array3, Axis};
use num_complex::Complex;
use rand::Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(name: &str, limit_s: f64, f: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let o = f();
    let dt = t0.elapsed().as_secs_f64();
    let pass = o.pass && dt < limit_s;
    println!(
        "[{}] {name}: {} | runtime {dt:.1} s (limit {limit_s} s)",
        if pass { "PASS" } else { "FAIL" },
        o.detail
    );
    pass
}

fn rand_c(rng: &mut kforge::rng::SimRng) -> Complex<f64> {
    Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
}

fn l2(v: impl Iterator<Item = Complex<f64>>) -> f64 {
    v.map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

// ---------------------------------------------------------------------------

fn nufft_oracle() -> Outcome {
    const TOL: f64 = 1e-5;
    let (mut worst_fwd, mut worst_adj) = (0.0f64, 0.0f64);
    for seed in 0..100u64 {
        let mut rng = rng_from_seed(1000 + seed);
        let h = rng.random_range(4..=32usize);
        let w = rng.random_range(4..=32usize);
        let m = rng.random_range(1..=256usize);
        let img = Array2::from_shape_simple_fn((h, w), || rand_c(&mut rng));
        let coords = Array2::from_shape_simple_fn((m, 2), || rng.random::<f64>() - 0.5);
        let plan = NufftPlan::<f64>::new(h, w, NufftParams::default()).unwrap();
        let fast = plan.forward(img.view(), coords.view()).unwrap();
        let direct: Vec<Complex<f64>> = coords
            .outer_iter()
            .map(|k| {
                let mut acc = Complex::new(0.0, 0.0);
                for ((y, x), v) in img.indexed_iter() {
                    let ph = -2.0 * PI * (k[0] * (y as f64 - (h / 2) as f64) + k[1] * (x as f64 - (w / 2) as f64));
                    acc += v * Complex::from_polar(1.0, ph);
                }
                acc
            })
            .collect();
        let err = l2(fast.iter().zip(&direct).map(|(a, b)| a - b)) / l2(direct.iter().copied());
        worst_fwd = worst_fwd.max(err);

        let y: Vec<Complex<f64>> = (0..m).map(|_| rand_c(&mut rng)).collect();
        let back = plan.adjoint(&y, coords.view(), None).unwrap();
        let lhs: Complex<f64> = fast.iter().zip(&y).map(|(a, b)| a * b.conj()).sum();
        let rhs: Complex<f64> = img.iter().zip(back.iter()).map(|(a, b)| a * b.conj()).sum();
        let scale = l2(fast.iter().copied()) * l2(y.iter().copied());
        worst_adj = worst_adj.max((lhs - rhs).norm() / scale);
    }
    Outcome {
        pass: worst_fwd <= TOL && worst_adj <= TOL,
        detail: format!(
            "100 seeds, ≤32×32 images, ≤256 points: max forward rel. ℓ2 {worst_fwd:.2e}, max adjoint mismatch {worst_adj:.2e} (tol {TOL:.0e})"
        ),
    }
}

// ---------------------------------------------------------------------------

fn simulation_invariants() -> Outcome {
    const RSS_TOL: f64 = 1e-6;
    const SNR_TOL: f64 = 0.05;
    const PHASE_TOL: f64 = 1e-9;
    let cfg = SimConfig::default();
    let (mut rss_err, mut snr_err, mut phase_err) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..5u64 {
        let video = toy_video(seed, 8, 64, 64).unwrap();
        let mut rng = rng_from_seed(seed);
        let channels = draw_channel_pair(&mut rng);
        let object = rgb_to_complex_with(&video, channels, cfg.phase_scale);
        for (z, rgb) in object.data.iter().zip(video.frames.lanes(Axis(3))) {
            phase_err = phase_err.max((z.norm() - rgb[channels.0].hypot(rgb[channels.1])).abs());
        }
        let (masked, _) = apply_elliptical_mask(&object, &cfg, &mut rng);
        let (phased, _) = add_background_phase(&masked, &cfg, &mut rng).unwrap();
        for (a, b) in masked.data.iter().zip(&phased.data) {
            phase_err = phase_err.max((a.norm() - b.norm()).abs());
        }
        let coils = generate_coil_maps::<f64>(&cfg, 64, 64, &mut rng).unwrap();
        for &r in coils.rss().iter() {
            rss_err = rss_err.max((r - 1.0).abs());
        }
        let clean = apply_coil_maps(&phased, &coils).unwrap();
        let (noisy, draw) = add_noise(&clean, &cfg, &mut rng).unwrap();
        let n = clean.data.len() as f64;
        let var: f64 = noisy
            .data
            .iter()
            .zip(&clean.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / (2.0 * n);
        let measured = mean_nonzero_magnitude(&clean).unwrap() / var.sqrt();
        snr_err = snr_err.max((measured / draw.snr - 1.0).abs());
    }

    // Bit-identical acquisitions with 1 and 8 workers.
    let cfg = PipelineConfig {
        frames: 8,
        height: 48,
        width: 48,
        virtual_coils: 4,
        ..PipelineConfig::toy()
    };
    let videos: Vec<(String, _)> = (0..4)
        .map(|i| {
            (
                format!("video_{i}"),
                toy_video(derive_seed(7, i), 8, 48, 48).unwrap().cast::<f32>(),
            )
        })
        .collect();
    let encode = |jobs: usize| {
        run_parallel(jobs, &videos, |(id, v)| {
            encode_kfrg(&acquire_video(v, id, &cfg)?.to_kfrg()?)
        })
        .unwrap()
    };
    let identical = encode(1) == encode(8);
    Outcome {
        pass: rss_err <= RSS_TOL && snr_err <= SNR_TOL && phase_err <= PHASE_TOL && identical,
        detail: format!(
            "coil RSS max |·−1| {rss_err:.1e} (tol {RSS_TOL:.0e}); noise SNR max rel. error {:.2}% (tol {:.0}%); phase-step magnitude change {phase_err:.1e} (tol {PHASE_TOL:.0e}); jobs 1 vs 8 bit-identical: {identical}",
            100.0 * snr_err,
            100.0 * SNR_TOL
        ),
    }
}

// ---------------------------------------------------------------------------

fn trajectory_contracts() -> Outcome {
    // The 15-frame no-repeat rule needs a band of at least 135 random-eligible lines.
    let h = 240;
    let cfg = CartesianConfig::default();
    let mask = cartesian_mask(45, h, &cfg, &mut rng_from_seed(3)).unwrap();
    let per_frame_ok = mask.mask.outer_iter().all(|r| r.iter().filter(|&&m| m).count() == 17);
    let center: Vec<usize> = center_lines(h, cfg.n_center).collect();
    let random: Vec<Vec<usize>> = mask
        .mask
        .outer_iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .filter(|(l, &m)| m && !center.contains(l))
                .map(|(l, _)| l)
                .collect()
        })
        .collect();
    let no_repeat =
        (0..45).all(|t| (t + 1..(t + 15).min(45)).all(|u| random[t].iter().all(|l| !random[u].contains(l))));
    let band = random_band(h, &cfg);
    let mut covered = vec![false; h];
    for r in &random[..15] {
        r.iter().for_each(|&l| covered[l] = true);
    }
    let band_total = band.len() + center.len();
    let coverage = (band.iter().filter(|&&l| covered[l]).count() + center.len()) as f64 / band_total as f64;

    let rcfg = RadialConfig::default();
    let radial: Trajectory = radial_trajectory(24, &rcfg).unwrap();
    let mut worst_angle = 0.0f64;
    let spokes_total = 24 * rcfg.spokes;
    for n in 0..spokes_total {
        let (t, j) = (n / rcfg.spokes, n % rcfg.spokes);
        let c = radial.frame_coords(t);
        let i = j * rcfg.samples + rcfg.samples - 1;
        let measured = c[[i, 0]].atan2(c[[i, 1]]).to_degrees().rem_euclid(180.0);
        let expected = (n as f64 * 23.8).rem_euclid(180.0);
        let d = (measured - expected).abs();
        worst_angle = worst_angle.max(d.min(180.0 - d));
        if n > 0 {
            let step = (radial_angle_deg(n, 23.8) - radial_angle_deg(n - 1, 23.8)).rem_euclid(180.0);
            worst_angle = worst_angle.max((step - 23.8).abs());
        }
    }

    let scfg = SpiralConfig::default();
    let spiral: Trajectory = spiral_trajectory(25, &scfg).unwrap();
    let periodic = (0..13).all(|t| spiral.frame_coords(t) == spiral.frame_coords(t + 12))
        && (1..12).all(|d| spiral.frame_coords(0) != spiral.frame_coords(d));
    let n = scfg.samples_per_arm;
    let mut worst_rot = 0.0f64;
    for t in [0, 5] {
        let c = spiral.frame_coords(t);
        for j in 1..scfg.arms {
            let (s, co) = (2.0 * PI * j as f64 / scfg.arms as f64).sin_cos();
            for i in 0..n {
                let (y0, x0) = (c[[i, 0]], c[[i, 1]]);
                let (y, x) = (c[[j * n + i, 0]], c[[j * n + i, 1]]);
                worst_rot = worst_rot
                    .max((y - (y0 * co + x0 * s)).abs())
                    .max((x - (x0 * co - y0 * s)).abs());
            }
        }
    }
    Outcome {
        pass: per_frame_ok && no_repeat && coverage >= 0.95 && worst_angle <= 1e-9 && periodic && worst_rot <= 1e-12,
        detail: format!(
            "cartesian H={h}: 17 lines/frame {per_frame_ok}, 15-frame no-repeat {no_repeat}, band coverage after 15 frames {:.1}% (≥95%); radial max angle error {worst_angle:.1e}° (≤1e-9); spiral 12-frame period {periodic}, 15-fold symmetry error {worst_rot:.1e} (≤1e-12)",
            100.0 * coverage
        ),
    }
}

// ---------------------------------------------------------------------------

fn cs_correctness() -> Outcome {
    const SLACK: f64 = 1e-6;
    const LIMIT_TOL: f64 = 1e-4;
    const MARGIN_DB: f64 = 2.0;
    let mut worst_increase = f64::NEG_INFINITY;
    let mut track = |obj: &[f64]| {
        let scale = obj[0].abs().max(f64::MIN_POSITIVE);
        for w in obj.windows(2) {
            worst_increase = worst_increase.max((w[1] - w[0]) / scale);
        }
    };

    // λ = 0 on fully sampled data reproduces the zero-filled estimate.
    let cfg = PipelineConfig::toy();
    let video = toy_video(100, 24, 64, 64).unwrap().cast::<f32>();
    let acq = acquire_video(&video, "limit", &cfg).unwrap();
    let images = acq.kspace.to_images();
    let imgs64 = MultiCoilImageSeries::new(images.data.mapv(|v| Complex::new(v.re as f64, v.im as f64)));
    let op = EncodingOperator::<f64>::cartesian(Array2::from_elem((24, 64), true), 64, 3, None).unwrap();
    let y = op.acquire(&imgs64).unwrap();
    let zf = zero_filled(&y, &op).unwrap();
    let cs = cs_temporal_tv(
        &y,
        &op,
        &CsConfig {
            lambda: 0.0,
            ..CsConfig::default()
        },
    )
    .unwrap();
    let limit_obj = cs.objective.iter().cloned().fold(0.0f64, f64::max);
    let limit_err = l2(cs.solution.iter().zip(zf.data.iter()).map(|(a, b)| a - b)) / l2(zf.data.iter().copied());

    // Toy set: 10 videos, every sampling scheme.
    let mut worst_gain = f64::INFINITY;
    let mut gains = Vec::new();
    for i in 0..10u64 {
        let id = format!("toy_{i:02}");
        let video = toy_video(derive_seed(2024, i), 24, 64, 64).unwrap().cast::<f32>();
        let acq = acquire_video(&video, &id, &cfg).unwrap();
        let truth = acq.reference();
        for s in SamplingKind::UNDERSAMPLED {
            let z = reconstruct(&acq, s, Method::Zf, &cfg).unwrap();
            let c = reconstruct(&acq, s, Method::Cs, &cfg).unwrap();
            track(&c.objective);
            let gain = psnr(&c.image, &truth, None).unwrap() - psnr(&z.image, &truth, None).unwrap();
            worst_gain = worst_gain.min(gain);
            gains.push(gain);
        }
    }
    let mean_gain = gains.iter().sum::<f64>() / gains.len() as f64;
    Outcome {
        pass: worst_increase <= SLACK && limit_err <= LIMIT_TOL && worst_gain >= MARGIN_DB,
        detail: format!(
            "max objective increase relative to the initial value {worst_increase:.1e} (slack {SLACK:.0e}); λ=0 full-sampling vs zero-filled {limit_err:.1e} (tol {LIMIT_TOL:.0e}), its objective stays at {limit_obj:.1e}; 10 toy videos × 3 samplings: min CS−ZF PSNR {worst_gain:.2} dB, mean {mean_gain:.2} dB (≥{MARGIN_DB} dB)"
        ),
    }
}

// ---------------------------------------------------------------------------

fn brute_ssim(a: &Array2<f64>, b: &Array2<f64>, range: f64) -> f64 {
    let g = gaussian_window(11, 1.5);
    let (h, w) = a.dim();
    let (c1, c2) = ((0.01 * range).powi(2), (0.03 * range).powi(2));
    let mut total = 0.0;
    let mut count = 0;
    for y0 in 0..=h - 11 {
        for x0 in 0..=w - 11 {
            let (mut ma, mut mb, mut saa, mut sbb, mut sab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for dy in 0..11 {
                for dx in 0..11 {
                    let wt = g[dy] * g[dx];
                    let (p, q) = (a[[y0 + dy, x0 + dx]], b[[y0 + dy, x0 + dx]]);
                    ma += wt * p;
                    mb += wt * q;
                    saa += wt * p * p;
                    sbb += wt * q * q;
                    sab += wt * p * q;
                }
            }
            let (va, vb, cov) = (saa - ma * ma, sbb - mb * mb, sab - ma * mb);
            total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    total / count as f64
}

/// Within-row permutation distribution of the largest mean-rank difference,
/// as mid-p values for each pair.
fn permutation_nemenyi(ranks: &Array2<f64>, shuffles: usize, seed: u64) -> Array2<f64> {
    let (n, k) = ranks.dim();
    let mean: Vec<f64> = ranks.mean_axis(Axis(0)).unwrap().to_vec();
    let mut rng = rng_from_seed(seed);
    let mut ranges = Vec::with_capacity(shuffles);
    let mut row: Vec<f64> = (1..=k).map(|v| v as f64).collect();
    let mut sums = vec![0.0; k];
    for _ in 0..shuffles {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for _ in 0..n {
            for i in (1..k).rev() {
                let j = rng.random_range(0..=i);
                row.swap(i, j);
            }
            sums.iter_mut().zip(&row).for_each(|(s, r)| *s += r);
        }
        let max = sums.iter().cloned().fold(f64::MIN, f64::max);
        let min = sums.iter().cloned().fold(f64::MAX, f64::min);
        ranges.push((max - min) / n as f64);
    }
    Array2::from_shape_fn((k, k), |(i, j)| {
        if i == j {
            return 1.0;
        }
        let d = (mean[i] - mean[j]).abs();
        let above = ranges.iter().filter(|&&r| r > d + 1e-9).count() as f64;
        let tied = ranges.iter().filter(|&&r| (r - d).abs() <= 1e-9).count() as f64;
        (above + 0.5 * tied) / shuffles as f64
    })
}

fn metrics_oracles() -> Outcome {
    let mut rng = rng_from_seed(77);
    let truth = Array3::from_shape_simple_fn((3, 24, 20), || rng.random::<f64>());
    let pred = truth.mapv(|v| v + 0.1 * (rng.random::<f64>() - 0.5));
    let (a, b) = (MagnitudeSeries::new(pred.clone()), MagnitudeSeries::new(truth.clone()));
    let n = truth.len() as f64;
    let mse_ref: f64 = pred.iter().zip(&truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / n;
    let peak = truth.iter().cloned().fold(f64::MIN, f64::max);
    let psnr_ref = 10.0 * (peak * peak / mse_ref).log10();
    let range = peak - truth.iter().cloned().fold(f64::MAX, f64::min);
    let ssim_ref = (0..3)
        .map(|t| {
            brute_ssim(
                &pred.index_axis(Axis(0), t).to_owned(),
                &truth.index_axis(Axis(0), t).to_owned(),
                range,
            )
        })
        .sum::<f64>()
        / 3.0;
    let e_mse = (mse(&a, &b).unwrap() - mse_ref).abs();
    let e_psnr = (psnr(&a, &b, None).unwrap() - psnr_ref).abs();
    let e_ssim = (ssim(&a, &b, &SsimParams::default()).unwrap() - ssim_ref).abs();

    // Strict ordering, n = 10, k = 3: mean ranks 1, 2, 3.
    let strict = Array2::from_shape_fn((10, 3), |(i, j)| j as f64 + 0.01 * i as f64);
    let f = friedman_nemenyi(strict.view()).unwrap();
    let e_fried = (f.statistic - 20.0).abs();

    let mut worst_nem = 0.0f64;
    for (n, k, seed) in [(20usize, 3usize, 5u64), (30, 4, 6)] {
        let mut rng = rng_from_seed(seed);
        let table = Array2::from_shape_fn((n, k), |(_, j)| {
            let u1: f64 = rng.random::<f64>().max(1e-300);
            let u2: f64 = rng.random();
            0.6 * j as f64 / k as f64 + (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
        });
        let res = friedman_nemenyi(table.view()).unwrap();
        let ranks = Array2::from_shape_fn((n, k), |(i, j)| {
            let row = table.row(i);
            1.0 + row.iter().filter(|&&v| v < row[j]).count() as f64
        });
        let perm = permutation_nemenyi(&ranks, 100_000, seed + 100);
        for (x, y) in res.nemenyi.iter().zip(perm.iter()) {
            worst_nem = worst_nem.max((x - y).abs());
        }
    }
    Outcome {
        pass: e_mse <= 1e-12 && e_psnr <= 1e-12 && e_ssim <= 1e-9 && e_fried <= 1e-12 && worst_nem <= 0.02,
        detail: format!(
            "|ΔMSE| {e_mse:.1e} (1e-12), |ΔPSNR| {e_psnr:.1e} (1e-12), |ΔSSIM| {e_ssim:.1e} (1e-9); Friedman strict n=10,k=3: {:.12} (20.0); Nemenyi vs 1e5-shuffle permutation: max |Δp| {worst_nem:.4} (0.02)",
            f.statistic
        ),
    }
}

// ---------------------------------------------------------------------------

fn format_roundtrip() -> Outcome {
    // A real record from the pipeline.
    let cfg = PipelineConfig {
        frames: 12,
        ..PipelineConfig::toy()
    };
    let video = toy_video(9, 12, 64, 64).unwrap().cast::<f32>();
    let acq = acquire_video(&video, "fmt", &cfg).unwrap();
    let records = kforge::export::build_records(&acq, &cfg, kforge::export::Arch::Varnet).unwrap();
    let first = encode_kfrg(&records[0].to_kfrg().unwrap()).unwrap();
    let second = encode_kfrg(&decode_kfrg(&first).unwrap()).unwrap();
    let identical = first == second;
    let mut corrupted = first.clone();
    let at = 13 + 16 + 8 * 100;
    corrupted[at] ^= 0x01;
    let detected = matches!(decode_kfrg(&corrupted), Err(kforge::error::Error::Checksum { .. }));

    // Header of a full-size record.
    let (t, c, h, w) = (24usize, 10usize, 224usize, 224usize);
    let big = KfrgFile {
        kind: RecordKind::GriddedComplex,
        arrays: vec![KfrgArray::new([t, c, h, w], vec![Complex::new(0.25f32, -1.0); t * c * h * w]).unwrap()],
        metadata: serde_json::json!({ "video_id": "big" }),
    };
    let bytes = encode_kfrg(&big).unwrap();
    let dims: Vec<u32> = (0..4)
        .map(|i| u32::from_le_bytes(bytes[13 + 4 * i..17 + 4 * i].try_into().unwrap()))
        .collect();
    let header_ok =
        &bytes[..4] == b"KFRG" && bytes[8] == RecordKind::GriddedComplex as u8 && dims == [24, 10, 224, 224];
    let big_roundtrip = decode_kfrg(&bytes).unwrap() == big;
    Outcome {
        pass: identical && detected && header_ok && big_roundtrip,
        detail: format!(
            "write→read→write byte-identical: {identical}; flipped payload byte detected: {detected}; T=24,C=10,224×224 header fields: {header_ok}, roundtrip: {big_roundtrip}"
        ),
    }
}

fn main() {
    let results = [
        check("NUFFT oracle", 10.0, nufft_oracle),
        check("Simulation pipeline invariants", 60.0, simulation_invariants),
        check("Trajectory contracts", 5.0, trajectory_contracts),
        check("CS correctness", 300.0, cs_correctness),
        check("Metrics oracles", 60.0, metrics_oracles),
        check("Format roundtrip", 5.0, format_roundtrip),
    ];
    let failed = results.iter().filter(|&&p| !p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
