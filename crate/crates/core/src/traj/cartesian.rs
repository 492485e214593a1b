use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Variable-density Cartesian line selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CartesianConfig {
    /// Contiguous lines around DC acquired in every frame.
    pub n_center: usize,
    /// Extra random lines per frame.
    pub n_random: usize,
    /// Fraction of all phase-encode lines, centered on DC, eligible for random selection.
    pub band_fraction: f64,
    /// A random line may not reappear within this many consecutive frames.
    pub no_repeat_window: usize,
}

impl Default for CartesianConfig {
    fn default() -> Self {
        Self {
            n_center: 8,
            n_random: 9,
            band_fraction: 0.6,
            no_repeat_window: 15,
        }
    }
}

impl CartesianConfig {
    /// Shrink the no-repeat window to the largest value the band of an
    /// `h`-line image can honour (at least 1).
    pub fn fitted(mut self, h: usize) -> Self {
        if self.n_random > 0 {
            let band = random_band(h, &self).len();
            self.no_repeat_window = self.no_repeat_window.min((band / self.n_random).max(1));
        }
        self
    }
}

/// `T×H` selection of phase-encode lines.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CartesianMask {
    pub mask: Array2<bool>,
    pub n_center: usize,
    pub n_random: usize,
}

impl CartesianMask {
    pub fn frames(&self) -> usize {
        self.mask.nrows()
    }

    pub fn lines(&self) -> usize {
        self.mask.ncols()
    }

    /// Acquired line indices of frame `t`.
    pub fn frame_lines(&self, t: usize) -> Vec<usize> {
        self.mask
            .row(t)
            .iter()
            .enumerate()
            .filter_map(|(i, &on)| on.then_some(i))
            .collect()
    }

    /// Every line acquired in every frame.
    pub fn full(frames: usize, lines: usize) -> Self {
        Self {
            mask: Array2::from_elem((frames, lines), true),
            n_center: lines,
            n_random: 0,
        }
    }
}

/// Center block `H/2 - n/2 .. H/2 + n/2`, clipped to the image.
pub fn center_lines(h: usize, n_center: usize) -> std::ops::Range<usize> {
    let start = (h / 2).saturating_sub(n_center / 2);
    start..(start + n_center).min(h)
}

/// Lines eligible for random selection: the centered low-frequency band minus the center block.
pub fn random_band(h: usize, cfg: &CartesianConfig) -> Vec<usize> {
    let width = ((cfg.band_fraction * h as f64).round() as usize).min(h);
    let start = (h / 2).saturating_sub(width / 2);
    let center = center_lines(h, cfg.n_center);
    (start..(start + width).min(h))
        .filter(|l| !center.contains(l))
        .collect()
}

/// Smallest line count whose band supports the no-repeat constraint.
fn min_lines(cfg: &CartesianConfig) -> Option<usize> {
    let need = cfg.n_random * cfg.no_repeat_window;
    (1..=1 << 16).find(|&h| random_band(h, cfg).len() >= need)
}

/// Per-frame line masks: a fixed center block plus random band lines that do
/// not repeat within any `no_repeat_window` consecutive frames.
pub fn cartesian_mask(frames: usize, h: usize, cfg: &CartesianConfig, rng: &mut SimRng) -> Result<CartesianMask> {
    if cfg.n_center > h {
        return Err(Error::invalid(format!(
            "{} center lines exceed {h} lines",
            cfg.n_center
        )));
    }
    if cfg.no_repeat_window == 0 {
        return Err(Error::invalid("no_repeat_window must be at least 1"));
    }
    let band = random_band(h, cfg);
    if band.len() < cfg.n_random * cfg.no_repeat_window {
        let hint = min_lines(cfg)
            .map(|m| format!("at least {m} lines are required"))
            .unwrap_or_else(|| "no image size satisfies this configuration".into());
        return Err(Error::invalid(format!(
            "band of {} lines cannot supply {} random lines per frame without repeats over {} frames; {hint}",
            band.len(),
            cfg.n_random,
            cfg.no_repeat_window
        )));
    }
    let mut mask = Array2::from_elem((frames, h), false);
    let mut history: Vec<Vec<usize>> = Vec::with_capacity(frames);
    for t in 0..frames {
        for l in center_lines(h, cfg.n_center) {
            mask[[t, l]] = true;
        }
        let recent = t.saturating_sub(cfg.no_repeat_window - 1);
        let blocked: Vec<usize> = history[recent..t].iter().flatten().copied().collect();
        let mut pool: Vec<usize> = band.iter().copied().filter(|l| !blocked.contains(l)).collect();
        // Partial Fisher-Yates: the first n_random entries are a uniform draw.
        for i in 0..cfg.n_random {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        pool.truncate(cfg.n_random);
        for &l in &pool {
            mask[[t, l]] = true;
        }
        history.push(pool);
    }
    Ok(CartesianMask {
        mask,
        n_center: cfg.n_center,
        n_random: cfg.n_random,
    })
}
