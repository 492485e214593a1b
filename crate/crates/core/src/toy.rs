//! Procedural RGB clips standing in for natural videos in tests and demos.

use std::f64::consts::PI;

use ndarray::Array4;
use rand::Rng;

use crate::error::Result;
use crate::rng::rng_from_seed;
use crate::video::RgbVideo;

struct Blob {
    color: [f64; 3],
    center: (f64, f64),
    path: (f64, f64),
    radius: (f64, f64),
    pulse: f64,
    speed: f64,
    phase: f64,
}

/// Textured background with a handful of moving, pulsing soft-edged blobs.
pub fn toy_video(seed: u64, frames: usize, h: usize, w: usize) -> Result<RgbVideo> {
    let mut rng = rng_from_seed(seed);
    let base: [f64; 3] = [
        rng.random_range(0.2..0.5),
        rng.random_range(0.2..0.5),
        rng.random_range(0.2..0.5),
    ];
    let tilt: [f64; 3] = [
        rng.random_range(-0.2..0.2),
        rng.random_range(-0.2..0.2),
        rng.random_range(-0.2..0.2),
    ];
    let freq = (rng.random_range(1.0..3.0), rng.random_range(1.0..3.0));
    let n_blobs = rng.random_range(3..6);
    let blobs: Vec<Blob> = (0..n_blobs)
        .map(|_| Blob {
            color: [
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..1.0),
            ],
            center: (rng.random_range(0.3..0.7), rng.random_range(0.3..0.7)),
            path: (rng.random_range(0.0..0.15), rng.random_range(0.0..0.15)),
            radius: (rng.random_range(0.06..0.2), rng.random_range(0.06..0.2)),
            pulse: rng.random_range(0.0..0.3),
            speed: rng.random_range(0.5..2.0),
            phase: rng.random_range(0.0..2.0 * PI),
        })
        .collect();
    let mut data = Array4::zeros((frames, h, w, 3));
    for t in 0..frames {
        let time = t as f64 / frames.max(1) as f64;
        for y in 0..h {
            let v = y as f64 / h as f64;
            for x in 0..w {
                let u = x as f64 / w as f64;
                let texture = 0.08 * (2.0 * PI * (freq.0 * u + freq.1 * v) + 3.0 * time).sin();
                let mut px = [0.0; 3];
                for c in 0..3 {
                    px[c] = base[c] + tilt[c] * (u - v) + texture;
                }
                for b in &blobs {
                    let arg = 2.0 * PI * b.speed * time + b.phase;
                    let cy = b.center.0 + b.path.0 * arg.sin();
                    let cx = b.center.1 + b.path.1 * arg.cos();
                    let scale = 1.0 + b.pulse * (2.0 * arg).sin();
                    let d = ((v - cy) / (b.radius.0 * scale)).powi(2) + ((u - cx) / (b.radius.1 * scale)).powi(2);
                    let alpha = 1.0 / (1.0 + ((d.sqrt() - 1.0) * 12.0).exp());
                    for c in 0..3 {
                        px[c] = px[c] * (1.0 - alpha) + b.color[c] * alpha;
                    }
                }
                for c in 0..3 {
                    data[[t, y, x, c]] = px[c].clamp(0.0, 1.0);
                }
            }
        }
    }
    RgbVideo::new(data, format!("toy-{seed}"))
}
