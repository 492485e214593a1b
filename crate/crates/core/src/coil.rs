//! Virtual-coil compression, coil combination and sensitivity estimation.

use ndarray::{Array2, Array3, Array4, ArrayView2, ArrayView3, Axis, Zip};
use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::linalg::hermitian_eigen;
use crate::scalar::Real;
use crate::series::{CoilMapSet, MagnitudeSeries, MultiCoilImageSeries, MultiCoilKSpace};

/// Projection from physical to virtual coils.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressionMatrix<T: Real = f64> {
    /// `C_in × C_out`, orthonormal columns.
    pub matrix: Array2<Complex<T>>,
    /// Fraction of total energy kept by the retained directions.
    pub retained_energy: f64,
    /// All singular values of the stacked data matrix, descending.
    pub singular_values: Vec<f64>,
}

impl<T: Real> CompressionMatrix<T> {
    pub fn n_in(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn n_out(&self) -> usize {
        self.matrix.ncols()
    }

    /// Apply to any `T×C_in×H×W` array (k-space or images alike).
    pub fn project(&self, data: &Array4<Complex<T>>) -> Result<Array4<Complex<T>>> {
        let (t, c, h, w) = data.dim();
        if c != self.n_in() {
            return Err(Error::shape(format!(
                "data has {c} coils, compression expects {}",
                self.n_in()
            )));
        }
        let n_out = self.n_out();
        let mut out = Array4::from_elem((t, n_out, h, w), Complex::new(T::zero(), T::zero()));
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .zip(data.axis_iter(Axis(0)).into_par_iter())
            .for_each(|(mut dst, src)| {
                for (v, mut plane) in dst.axis_iter_mut(Axis(0)).enumerate() {
                    for (ci, coil) in src.axis_iter(Axis(0)).enumerate() {
                        let m = self.matrix[[ci, v]];
                        Zip::from(&mut plane).and(&coil).for_each(|o, &x| *o += x * m);
                    }
                }
            });
        Ok(out)
    }
}

/// Coil Gram matrix `AᴴA` of the data stacked as `(points × coils)`.
fn coil_gram<T: Real>(data: &Array4<Complex<T>>) -> Array2<Complex<T>> {
    let c = data.dim().1;
    let partials: Vec<Array2<Complex<T>>> = data
        .axis_iter(Axis(0))
        .into_par_iter()
        .map(|frame| {
            let mut g = Array2::from_elem((c, c), Complex::new(T::zero(), T::zero()));
            for i in 0..c {
                let xi = frame.index_axis(Axis(0), i);
                for j in i..c {
                    let xj = frame.index_axis(Axis(0), j);
                    let mut acc = Complex::new(T::zero(), T::zero());
                    Zip::from(&xi).and(&xj).for_each(|a, b| acc += a.conj() * b);
                    g[[i, j]] = acc;
                    g[[j, i]] = acc.conj();
                }
            }
            g
        })
        .collect();
    // Fixed summation order keeps the result independent of thread count.
    partials.into_iter().fold(
        Array2::from_elem((c, c), Complex::new(T::zero(), T::zero())),
        |acc, g| acc + g,
    )
}

/// Compress multi-coil k-space onto its `n_virtual` dominant right-singular directions.
///
/// All samples of all frames are stacked into one `(points × C_in)` matrix;
/// the right-singular vectors are obtained from the eigen-decomposition of its
/// `C_in × C_in` Gram matrix.
pub fn svd_coil_compress<T: Real>(
    ksp: &MultiCoilKSpace<T>,
    n_virtual: usize,
) -> Result<(MultiCoilKSpace<T>, CompressionMatrix<T>)> {
    let c_in = ksp.n_coils();
    if n_virtual == 0 || n_virtual > c_in {
        return Err(Error::invalid(format!(
            "cannot compress {c_in} coils to {n_virtual} virtual coils"
        )));
    }
    let gram = coil_gram(&ksp.data);
    let eig = hermitian_eigen(&gram);
    let eigvals: Vec<f64> = eig.values.iter().map(|v| v.as_f64().max(0.0)).collect();
    let total: f64 = eigvals.iter().sum();
    let kept: f64 = eigvals[..n_virtual].iter().sum();
    let retained_energy = if total > 0.0 { kept / total } else { 1.0 };
    let matrix = eig.vectors.slice(ndarray::s![.., ..n_virtual]).to_owned();
    let cm = CompressionMatrix {
        matrix,
        retained_energy,
        singular_values: eigvals.iter().map(|v| v.sqrt()).collect(),
    };
    let data = cm.project(&ksp.data)?;
    Ok((MultiCoilKSpace::new(data), cm))
}

/// Pixelwise root-sum-of-squares over the coil axis.
pub fn rss_combine<T: Real>(mc: &MultiCoilImageSeries<T>) -> MagnitudeSeries<T> {
    MagnitudeSeries::new(rss_of(&mc.data))
}

pub(crate) fn rss_of<T: Real>(data: &Array4<Complex<T>>) -> Array3<T> {
    let (t, _, h, w) = data.dim();
    let mut out = Array3::<T>::zeros((t, h, w));
    for (mut o, frame) in out.axis_iter_mut(Axis(0)).zip(data.axis_iter(Axis(0))) {
        for coil in frame.axis_iter(Axis(0)) {
            Zip::from(&mut o).and(&coil).for_each(|o, v| *o += v.norm_sqr());
        }
        o.mapv_inplace(|v: T| v.sqrt());
    }
    out
}

/// Sensitivities and the number of pixels where no signal was found.
#[derive(Debug, Clone)]
pub struct SensitivityEstimate<T: Real = f64> {
    pub maps: CoilMapSet<T>,
    pub degenerate_pixels: usize,
}

impl<T: Real> SensitivityEstimate<T> {
    pub fn is_degenerate(&self) -> bool {
        let (h, w) = self.maps.image_shape();
        self.degenerate_pixels == h * w
    }
}

/// Floor below which the coil RSS is treated as "no signal".
pub const SENSITIVITY_FLOOR: f64 = 1e-8;

/// Normalize time-combined coil images (`C×H×W`) by their RSS.
pub fn sensitivities_from_images<T: Real>(images: ArrayView3<Complex<T>>) -> SensitivityEstimate<T> {
    let rss = images.map_axis(Axis(0), |v| v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt());
    let floor = T::of(SENSITIVITY_FLOOR);
    let degenerate_pixels = rss.iter().filter(|&&r| !(r > floor)).count();
    let mut maps = images.to_owned();
    for mut coil in maps.axis_iter_mut(Axis(0)) {
        Zip::from(&mut coil).and(&rss).for_each(|v, &r| {
            *v = if r > floor {
                *v / r
            } else {
                Complex::new(T::zero(), T::zero())
            };
        });
    }
    SensitivityEstimate {
        maps: CoilMapSet { maps },
        degenerate_pixels,
    }
}

/// Estimate coil sensitivities from time-combined Cartesian k-space.
///
/// With a `T×H` line mask, each k-space line is averaged over the frames in
/// which it was acquired (never-acquired lines stay zero); without one, all
/// frames are averaged.
pub fn estimate_sensitivities<T: Real>(
    ksp: &MultiCoilKSpace<T>,
    line_mask: Option<ArrayView2<bool>>,
) -> Result<SensitivityEstimate<T>> {
    let (t, c, h, w) = ksp.dim();
    let mut avg = Array3::from_elem((c, h, w), Complex::new(T::zero(), T::zero()));
    match line_mask {
        None => {
            for frame in ksp.data.axis_iter(Axis(0)) {
                avg += &frame;
            }
            let inv = T::one() / T::of_usize(t);
            avg.mapv_inplace(|v| v * inv);
        }
        Some(mask) => {
            if mask.dim() != (t, h) {
                return Err(Error::shape(format!(
                    "line mask is {:?}, k-space needs {t}x{h}",
                    mask.dim()
                )));
            }
            for line in 0..h {
                let hits: Vec<usize> = (0..t).filter(|&f| mask[[f, line]]).collect();
                if hits.is_empty() {
                    continue;
                }
                let inv = T::one() / T::of_usize(hits.len());
                for coil in 0..c {
                    for x in 0..w {
                        let s: Complex<T> = hits.iter().map(|&f| ksp.data[[f, coil, line, x]]).sum();
                        avg[[coil, line, x]] = s * inv;
                    }
                }
            }
        }
    }
    let plan = Fft2::new(h, w);
    for coil in avg.axis_iter_mut(Axis(0)) {
        plan.inverse(coil);
    }
    Ok(sensitivities_from_images(avg.view()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn random4(t: usize, c: usize, h: usize, w: usize, seed: u64) -> Array4<Complex<f64>> {
        let mut rng = rng_from_seed(seed);
        Array4::from_shape_simple_fn((t, c, h, w), || {
            Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn energy(a: &Array4<Complex<f64>>) -> f64 {
        a.iter().map(|v| v.norm_sqr()).sum()
    }

    #[test]
    fn full_rank_compression_is_lossless() {
        let ksp = MultiCoilKSpace::new(random4(3, 6, 8, 8, 1));
        let (out, cm) = svd_coil_compress(&ksp, 6).unwrap();
        assert!((cm.retained_energy - 1.0).abs() < 1e-10);
        // Reproject with Mᴴ.
        let back = Array4::from_shape_fn(ksp.data.dim(), |(t, c, y, x)| {
            (0..6)
                .map(|v| out.data[[t, v, y, x]] * cm.matrix[[c, v]].conj())
                .sum::<Complex<f64>>()
        });
        for (a, b) in back.iter().zip(ksp.data.iter()) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn rank_three_data_keeps_all_energy() {
        // 8 coils that are mixtures of 3 underlying signals.
        let base = random4(2, 3, 8, 8, 2);
        let mut rng = rng_from_seed(3);
        let mix = Array2::from_shape_simple_fn((3, 8), || Complex::new(rng.random::<f64>(), rng.random::<f64>()));
        let data = Array4::from_shape_fn((2, 8, 8, 8), |(t, c, y, x)| {
            (0..3).map(|k| base[[t, k, y, x]] * mix[[k, c]]).sum::<Complex<f64>>()
        });
        let ksp = MultiCoilKSpace::new(data);
        let (out, cm) = svd_coil_compress(&ksp, 3).unwrap();
        assert!((cm.retained_energy - 1.0).abs() < 1e-10);
        assert!((energy(&out.data) / energy(&ksp.data) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn projected_energy_matches_retained_fraction() {
        let ksp = MultiCoilKSpace::new(random4(4, 12, 6, 6, 5));
        let (out, cm) = svd_coil_compress(&ksp, 4).unwrap();
        assert_eq!(out.n_coils(), 4);
        assert!(cm.retained_energy < 1.0);
        let ratio = energy(&out.data) / energy(&ksp.data);
        assert!((ratio - cm.retained_energy).abs() < 1e-9);
        for i in 0..4 {
            for j in 0..4 {
                let d: Complex<f64> = (0..12).map(|c| cm.matrix[[c, i]].conj() * cm.matrix[[c, j]]).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).norm() < 1e-10);
            }
        }
        assert!(svd_coil_compress(&ksp, 13).is_err());
    }

    #[test]
    fn rss_examples() {
        let mut d = Array4::from_elem((1, 2, 1, 1), Complex::new(0.0, 0.0));
        d[[0, 0, 0, 0]] = Complex::new(3.0, 0.0);
        d[[0, 1, 0, 0]] = Complex::new(0.0, 4.0);
        assert_eq!(rss_combine(&MultiCoilImageSeries::new(d)).data[[0, 0, 0]], 5.0);

        let single = random4(2, 1, 4, 4, 1);
        let r = rss_combine(&MultiCoilImageSeries::new(single.clone()));
        for ((t, y, x), v) in r.data.indexed_iter() {
            assert!((v - single[[t, 0, y, x]].norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn rss_invariant_to_coil_phase() {
        let d = random4(2, 3, 5, 5, 7);
        let mut rotated = d.clone();
        for (c, ph) in [(0usize, 0.3f64), (1, -2.0), (2, 1.1)] {
            rotated
                .index_axis_mut(Axis(1), c)
                .mapv_inplace(|v| v * Complex::from_polar(1.0, ph));
        }
        let a = rss_combine(&MultiCoilImageSeries::new(d));
        let b = rss_combine(&MultiCoilImageSeries::new(rotated));
        for (x, y) in a.data.iter().zip(b.data.iter()) {
            assert!((x - y).abs() <= 1e-15 * x.max(1.0));
        }
    }

    #[test]
    fn sensitivity_edge_cases() {
        let single = MultiCoilImageSeries::new(random4(3, 1, 8, 8, 4)).to_kspace();
        let est = estimate_sensitivities(&single, None).unwrap();
        assert!(est.maps.maps.iter().all(|v| (v.norm() - 1.0).abs() < 1e-12));

        let zero = MultiCoilKSpace::new(Array4::from_elem((2, 3, 8, 8), Complex::new(0.0, 0.0)));
        let est = estimate_sensitivities(&zero, None).unwrap();
        assert!(est.is_degenerate());
        assert!(est.maps.maps.iter().all(|v| v.norm() == 0.0));

        let bad_mask = Array2::from_elem((2, 7), true);
        assert!(estimate_sensitivities(&zero, Some(bad_mask.view())).is_err());
    }

    #[test]
    fn masked_average_uses_only_acquired_frames() {
        let ksp = MultiCoilImageSeries::new(random4(1, 2, 8, 8, 9)).to_kspace();
        // Two frames: identical data, but frame 1 has nothing acquired.
        let mut two = Array4::from_elem((2, 2, 8, 8), Complex::new(0.0, 0.0));
        two.index_axis_mut(Axis(0), 0).assign(&ksp.data.index_axis(Axis(0), 0));
        let mut mask = Array2::from_elem((2, 8), false);
        mask.row_mut(0).fill(true);
        let masked = estimate_sensitivities(&MultiCoilKSpace::new(two), Some(mask.view())).unwrap();
        let full = estimate_sensitivities(&ksp, None).unwrap();
        for (a, b) in masked.maps.maps.iter().zip(full.maps.maps.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
