use ndarray::{Array2, ArrayView2};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FriedmanResult {
    /// Tie-corrected Friedman chi-square statistic.
    pub statistic: f64,
    pub p_value: f64,
    pub mean_ranks: Vec<f64>,
    /// Pairwise Nemenyi p-values (`k×k`, unit diagonal).
    pub nemenyi: Array2<f64>,
}

/// Ranks `1..=n` with ties sharing the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &o in &order[i..=j] {
            ranks[o] = r;
        }
        i = j + 1;
    }
    ranks
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// CDF of the studentized range of `k` standard normals (infinite degrees of freedom):
/// `k ∫ φ(z) [Φ(z) − Φ(z − q)]^(k−1) dz`.
pub fn studentized_range_cdf(q: f64, k: usize) -> f64 {
    if q <= 0.0 || k < 2 {
        return 0.0;
    }
    if !q.is_finite() {
        return 1.0;
    }
    let (lo, hi) = (-9.0, 9.0 + q);
    let n = 4000;
    let step = (hi - lo) / n as f64;
    let f = |z: f64| {
        let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        phi * (std_normal_cdf(z) - std_normal_cdf(z - q)).powi(k as i32 - 1)
    };
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + i as f64 * step);
    }
    (k as f64 * acc * step / 3.0).clamp(0.0, 1.0)
}

/// Friedman test on a subjects × methods table (smaller value = better rank;
/// each row is re-ranked with mid-ranks) and Nemenyi post-hoc p-values.
pub fn friedman_nemenyi(table: ArrayView2<f64>) -> Result<FriedmanResult> {
    let (n, k) = table.dim();
    if n < 2 {
        return Err(Error::invalid(format!("need at least two subjects, got {n}")));
    }
    if k < 3 {
        return Err(Error::invalid(format!("need at least three methods, got {k}")));
    }
    if table.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("rank table contains non-finite values"));
    }
    let mut sums = vec![0.0; k];
    let mut tie_sum = 0.0;
    for row in table.outer_iter() {
        let vals: Vec<f64> = row.to_vec();
        let r = midranks(&vals);
        for (s, v) in sums.iter_mut().zip(&r) {
            *s += v;
        }
        let mut sorted = vals;
        sorted.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < k {
            let mut j = i;
            while j + 1 < k && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_sum += t * t * t - t;
            i = j + 1;
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let mean_ranks: Vec<f64> = sums.iter().map(|s| s / nf).collect();
    let centre = (kf + 1.0) / 2.0;
    let raw = 12.0 * nf / (kf * (kf + 1.0)) * mean_ranks.iter().map(|r| (r - centre).powi(2)).sum::<f64>();
    let correction = 1.0 - tie_sum / (nf * (kf * kf * kf - kf));
    let (statistic, p_value) = if correction <= 1e-12 {
        (0.0, 1.0)
    } else {
        let stat = raw / correction;
        let chi = ChiSquared::new(kf - 1.0).map_err(|e| Error::Numerical(e.to_string()))?;
        (stat, (1.0 - chi.cdf(stat)).clamp(0.0, 1.0))
    };
    let se = (kf * (kf + 1.0) / (12.0 * nf)).sqrt();
    let nemenyi = Array2::from_shape_fn((k, k), |(i, j)| {
        if i == j {
            1.0
        } else {
            1.0 - studentized_range_cdf((mean_ranks[i] - mean_ranks[j]).abs() / se, k)
        }
    });
    Ok(FriedmanResult {
        statistic,
        p_value,
        mean_ranks,
        nemenyi,
    })
}
