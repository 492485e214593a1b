use std::sync::OnceLock;

use ndarray::{Array2, Array3, Array4, ArrayView2, ArrayViewMut2, Axis, Zip};
use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::nufft::{NufftParams, NufftPlan, PreparedSamples, ToeplitzKernel};
use crate::scalar::Real;
use crate::series::{CoilMapSet, MultiCoilImageSeries, MultiCoilKSpace};
use crate::traj::Trajectory;

#[derive(Debug, Clone)]
pub enum Sampling<T: Real> {
    /// `T×H` acquired phase-encode lines; data hold the full `H·W` grid per frame.
    Cartesian(Array2<bool>),
    NonCartesian {
        traj: Trajectory<T>,
        plan: NufftPlan<T>,
        prepared: Vec<PreparedSamples<T>>,
        params: NufftParams,
        /// Per-frame `Eᴴ E` kernels, built on first use.
        toeplitz: OnceLock<Vec<ToeplitzKernel<T>>>,
    },
}

/// `E`: image series → per-coil measurements `T×C×M`.
///
/// Images are `T×K×H×W` with `K = 1` when coil maps are present (SENSE) and
/// `K = C` otherwise. Cartesian sampling uses the centered orthonormal FFT;
/// non-Cartesian sampling uses the NUFFT scaled by `1/√(HW)` so both share
/// the same k-space scale.
#[derive(Debug, Clone)]
pub struct EncodingOperator<T: Real = f64> {
    sampling: Sampling<T>,
    maps: Option<CoilMapSet<T>>,
    frames: usize,
    n_coils: usize,
    h: usize,
    w: usize,
    fft: Fft2<T>,
}

fn zero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

impl<T: Real> EncodingOperator<T> {
    pub fn cartesian(mask: Array2<bool>, w: usize, n_coils: usize, maps: Option<CoilMapSet<T>>) -> Result<Self> {
        let (frames, h) = mask.dim();
        Self::build(Sampling::Cartesian(mask), frames, (h, w), n_coils, maps)
    }

    pub fn non_cartesian(
        traj: Trajectory<T>,
        image_shape: (usize, usize),
        n_coils: usize,
        maps: Option<CoilMapSet<T>>,
        params: NufftParams,
    ) -> Result<Self> {
        let plan = NufftPlan::new(image_shape.0, image_shape.1, params)?;
        let prepared = (0..traj.frames())
            .map(|t| plan.prepare(traj.frame_coords(t)))
            .collect::<Result<Vec<_>>>()?;
        let frames = traj.frames();
        let sampling = Sampling::NonCartesian {
            traj,
            plan,
            prepared,
            params,
            toeplitz: OnceLock::new(),
        };
        Self::build(sampling, frames, image_shape, n_coils, maps)
    }

    fn build(
        sampling: Sampling<T>,
        frames: usize,
        (h, w): (usize, usize),
        n_coils: usize,
        maps: Option<CoilMapSet<T>>,
    ) -> Result<Self> {
        if frames == 0 || h == 0 || w == 0 || n_coils == 0 {
            return Err(Error::invalid("operator needs at least one frame, pixel and coil"));
        }
        if let Some(m) = &maps {
            if m.maps.dim() != (n_coils, h, w) {
                return Err(Error::shape(format!(
                    "coil maps are {:?}, expected {n_coils}x{h}x{w}",
                    m.maps.dim()
                )));
            }
        }
        Ok(Self {
            sampling,
            maps,
            frames,
            n_coils,
            h,
            w,
            fft: Fft2::new(h, w),
        })
    }

    pub fn with_maps(mut self, maps: Option<CoilMapSet<T>>) -> Result<Self> {
        if let Some(m) = &maps {
            if m.maps.dim() != (self.n_coils, self.h, self.w) {
                return Err(Error::shape(format!("coil maps are {:?}", m.maps.dim())));
            }
        }
        self.maps = maps;
        Ok(self)
    }

    pub fn sampling(&self) -> &Sampling<T> {
        &self.sampling
    }

    pub fn maps(&self) -> Option<&CoilMapSet<T>> {
        self.maps.as_ref()
    }

    pub fn is_cartesian(&self) -> bool {
        matches!(self.sampling, Sampling::Cartesian(_))
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn n_coils(&self) -> usize {
        self.n_coils
    }

    pub fn image_shape(&self) -> (usize, usize) {
        (self.h, self.w)
    }

    /// Image-space channels: 1 with coil maps, `C` without.
    pub fn channels(&self) -> usize {
        if self.maps.is_some() {
            1
        } else {
            self.n_coils
        }
    }

    pub fn image_dim(&self) -> (usize, usize, usize, usize) {
        (self.frames, self.channels(), self.h, self.w)
    }

    pub fn samples_per_frame(&self) -> usize {
        match &self.sampling {
            Sampling::Cartesian(_) => self.h * self.w,
            Sampling::NonCartesian { traj, .. } => traj.samples_per_frame(),
        }
    }

    pub fn data_dim(&self) -> (usize, usize, usize) {
        (self.frames, self.n_coils, self.samples_per_frame())
    }

    pub fn check_data(&self, y: &Array3<Complex<T>>) -> Result<()> {
        if y.dim() != self.data_dim() {
            return Err(Error::shape(format!(
                "data are {:?}, operator expects {:?}",
                y.dim(),
                self.data_dim()
            )));
        }
        Ok(())
    }

    pub fn check_image(&self, x: &Array4<Complex<T>>) -> Result<()> {
        if x.dim() != self.image_dim() {
            return Err(Error::shape(format!(
                "image is {:?}, operator expects {:?}",
                x.dim(),
                self.image_dim()
            )));
        }
        Ok(())
    }

    fn inv_sqrt_n(&self) -> T {
        T::one() / T::of_usize(self.h * self.w).sqrt()
    }

    fn encode_frame(&self, t: usize, img: ArrayView2<Complex<T>>, out: &mut [Complex<T>]) {
        match &self.sampling {
            Sampling::Cartesian(mask) => {
                let mut k = img.to_owned();
                self.fft.forward(k.view_mut());
                for (line, row) in k.outer_iter().enumerate() {
                    let dst = &mut out[line * self.w..(line + 1) * self.w];
                    if mask[[t, line]] {
                        dst.iter_mut().zip(row).for_each(|(o, v)| *o = *v);
                    } else {
                        dst.fill(zero());
                    }
                }
            }
            Sampling::NonCartesian { plan, prepared, .. } => {
                plan.forward_prepared(img, &prepared[t], out);
                let s = self.inv_sqrt_n();
                out.iter_mut().for_each(|v| *v = *v * s);
            }
        }
    }

    /// Adjoint of one frame/coil; `weighted` applies the density weights and
    /// the scale that makes it an inverse on fully covered k-space.
    fn decode_frame(&self, t: usize, y: &[Complex<T>], weighted: bool, mut out: ArrayViewMut2<Complex<T>>) {
        match &self.sampling {
            Sampling::Cartesian(mask) => {
                for (line, mut row) in out.outer_iter_mut().enumerate() {
                    if mask[[t, line]] {
                        row.iter_mut()
                            .zip(&y[line * self.w..(line + 1) * self.w])
                            .for_each(|(o, v)| *o = *v);
                    } else {
                        row.fill(zero());
                    }
                }
                self.fft.inverse(out);
            }
            Sampling::NonCartesian {
                traj, plan, prepared, ..
            } => {
                let dcf = weighted.then(|| traj.frame_dcf(t).to_vec());
                plan.adjoint_prepared(y, &prepared[t], dcf.as_deref(), out.view_mut());
                let s = if weighted {
                    T::of_usize(self.h * self.w).sqrt()
                } else {
                    self.inv_sqrt_n()
                };
                out.mapv_inplace(|v| v * s);
            }
        }
    }

    /// Sample fully resolved coil images (`T×C×H×W`) without applying coil maps.
    pub fn acquire(&self, coil_images: &MultiCoilImageSeries<T>) -> Result<Array3<Complex<T>>> {
        let (t, c, h, w) = coil_images.dim();
        if (t, c, h, w) != (self.frames, self.n_coils, self.h, self.w) {
            return Err(Error::shape(format!(
                "coil images are {:?}, operator expects {:?}",
                coil_images.dim(),
                (self.frames, self.n_coils, self.h, self.w)
            )));
        }
        let mut y = Array3::from_elem(self.data_dim(), zero());
        y.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(t, mut frame)| {
                for (c, mut out) in frame.axis_iter_mut(Axis(0)).enumerate() {
                    let img = coil_images.data.slice(ndarray::s![t, c, .., ..]);
                    self.encode_frame(t, img, out.as_slice_mut().unwrap());
                }
            });
        Ok(y)
    }

    /// Sample fully sampled Cartesian k-space (`T×C×H×W`).
    pub fn acquire_kspace(&self, ksp: &MultiCoilKSpace<T>) -> Result<Array3<Complex<T>>> {
        match &self.sampling {
            Sampling::Cartesian(mask) => {
                if ksp.dim() != (self.frames, self.n_coils, self.h, self.w) {
                    return Err(Error::shape(format!("k-space is {:?}", ksp.dim())));
                }
                let mut y = Array3::from_elem(self.data_dim(), zero());
                for ((t, c, m), v) in y.indexed_iter_mut() {
                    let line = m / self.w;
                    if mask[[t, line]] {
                        *v = ksp.data[[t, c, line, m % self.w]];
                    }
                }
                Ok(y)
            }
            Sampling::NonCartesian { .. } => self.acquire(&ksp.to_images()),
        }
    }

    /// `E x`.
    pub fn forward(&self, x: &Array4<Complex<T>>) -> Array3<Complex<T>> {
        assert_eq!(x.dim(), self.image_dim(), "image shape does not match operator");
        let mut y = Array3::from_elem(self.data_dim(), zero());
        y.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(t, mut frame)| {
                let mut buf = Array2::from_elem((self.h, self.w), zero());
                for (c, mut out) in frame.axis_iter_mut(Axis(0)).enumerate() {
                    match &self.maps {
                        Some(m) => {
                            Zip::from(&mut buf)
                                .and(&x.slice(ndarray::s![t, 0, .., ..]))
                                .and(&m.maps.index_axis(Axis(0), c))
                                .for_each(|b, &v, &s| *b = v * s);
                        }
                        None => buf.assign(&x.slice(ndarray::s![t, c, .., ..])),
                    }
                    self.encode_frame(t, buf.view(), out.as_slice_mut().unwrap());
                }
            });
        y
    }

    fn back(&self, y: &Array3<Complex<T>>, weighted: bool) -> Array4<Complex<T>> {
        assert_eq!(y.dim(), self.data_dim(), "data shape does not match operator");
        let mut x = Array4::from_elem(self.image_dim(), zero());
        x.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(t, mut frame)| {
                let mut buf = Array2::from_elem((self.h, self.w), zero());
                for c in 0..self.n_coils {
                    let yc = y.slice(ndarray::s![t, c, ..]);
                    let samples = yc.as_slice().map(|s| s.to_vec()).unwrap_or_else(|| yc.to_vec());
                    match &self.maps {
                        Some(m) => {
                            self.decode_frame(t, &samples, weighted, buf.view_mut());
                            Zip::from(frame.index_axis_mut(Axis(0), 0))
                                .and(&buf)
                                .and(&m.maps.index_axis(Axis(0), c))
                                .for_each(|o, &v, &s| *o += v * s.conj());
                        }
                        None => self.decode_frame(t, &samples, weighted, frame.index_axis_mut(Axis(0), c)),
                    }
                }
            });
        x
    }

    /// `Eᴴ y`.
    pub fn adjoint(&self, y: &Array3<Complex<T>>) -> Array4<Complex<T>> {
        self.back(y, false)
    }

    /// Density-compensated adjoint (the zero-filled / gridding estimate).
    pub fn gridding_adjoint(&self, y: &Array3<Complex<T>>) -> Array4<Complex<T>> {
        self.back(y, true)
    }

    fn toeplitz(&self) -> Option<Result<&[ToeplitzKernel<T>]>> {
        let Sampling::NonCartesian {
            traj, params, toeplitz, ..
        } = &self.sampling
        else {
            return None;
        };
        if let Some(k) = toeplitz.get() {
            return Some(Ok(k));
        }
        let scale = 1.0 / (self.h * self.w) as f64;
        let built = (0..self.frames)
            .into_par_iter()
            .map(|t| ToeplitzKernel::new(self.h, self.w, traj.frame_coords(t), *params, scale))
            .collect::<Result<Vec<_>>>();
        Some(built.map(|k| toeplitz.get_or_init(|| k).as_slice()))
    }

    /// `Eᴴ E x`; non-Cartesian sampling uses per-frame Toeplitz kernels.
    pub fn normal(&self, x: &Array4<Complex<T>>) -> Result<Array4<Complex<T>>> {
        let mut out = Array4::from_elem(self.image_dim(), zero());
        self.normal_into(x, &mut out)?;
        Ok(out)
    }

    /// [`EncodingOperator::normal`] writing into `out`.
    pub fn normal_into(&self, x: &Array4<Complex<T>>, out: &mut Array4<Complex<T>>) -> Result<()> {
        self.check_image(x)?;
        self.check_image(out)?;
        let kernels = match self.toeplitz() {
            None => {
                out.assign(&self.adjoint(&self.forward(x)));
                return Ok(());
            }
            Some(k) => k?,
        };
        out.axis_iter_mut(Axis(0))
            .into_par_iter()
            .enumerate()
            .for_each(|(t, mut frame)| {
                let k = &kernels[t];
                let mut work = k.workspace();
                match &self.maps {
                    Some(m) => {
                        let mut buf = Array2::from_elem((self.h, self.w), zero());
                        let mut conv = buf.clone();
                        frame.fill(zero());
                        for c in 0..self.n_coils {
                            let s = m.maps.index_axis(Axis(0), c);
                            Zip::from(&mut buf)
                                .and(&x.slice(ndarray::s![t, 0, .., ..]))
                                .and(&s)
                                .for_each(|b, &v, &sv| *b = v * sv);
                            k.apply_with(buf.view(), conv.view_mut(), &mut work);
                            Zip::from(frame.index_axis_mut(Axis(0), 0))
                                .and(&conv)
                                .and(&s)
                                .for_each(|o, &v, &sv| *o += v * sv.conj());
                        }
                    }
                    None => {
                        for (c, out_c) in frame.axis_iter_mut(Axis(0)).enumerate() {
                            k.apply_with(x.slice(ndarray::s![t, c, .., ..]), out_c, &mut work);
                        }
                    }
                }
            });
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use crate::traj::{radial_trajectory, RadialConfig};
    use rand::Rng;

    fn rand_c<D: ndarray::Dimension, Sh: ndarray::ShapeBuilder<Dim = D>>(
        shape: Sh,
        seed: u64,
    ) -> ndarray::Array<Complex<f64>, D> {
        let mut rng = rng_from_seed(seed);
        ndarray::Array::from_shape_simple_fn(shape, || {
            Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn inner<D: ndarray::Dimension>(
        a: &ndarray::Array<Complex<f64>, D>,
        b: &ndarray::Array<Complex<f64>, D>,
    ) -> Complex<f64> {
        a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
    }

    fn norm<D: ndarray::Dimension>(a: &ndarray::Array<Complex<f64>, D>) -> f64 {
        a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    fn check_adjoint(op: &EncodingOperator) {
        let x = rand_c(op.image_dim(), 1);
        let y = rand_c(op.data_dim(), 2);
        let lhs = inner(&op.forward(&x), &y);
        let rhs = inner(&x, &op.adjoint(&y));
        let rel = (lhs - rhs).norm() / (norm(&op.forward(&x)) * norm(&y));
        assert!(rel < 1e-5, "{rel}");
    }

    fn maps(c: usize, h: usize, w: usize) -> CoilMapSet {
        CoilMapSet {
            maps: rand_c((c, h, w), 9),
        }
    }

    #[test]
    fn cartesian_adjoint_identity() {
        let mut rng = rng_from_seed(4);
        let mask = Array2::from_shape_simple_fn((3, 12), || rng.random::<bool>());
        check_adjoint(&EncodingOperator::cartesian(mask.clone(), 10, 2, None).unwrap());
        check_adjoint(&EncodingOperator::cartesian(mask, 10, 2, Some(maps(2, 12, 10))).unwrap());
    }

    #[test]
    fn noncartesian_adjoint_identity() {
        let cfg = RadialConfig {
            spokes: 5,
            samples: 16,
            angle_increment: 23.8,
        };
        let traj = radial_trajectory(3, &cfg).unwrap();
        let op = EncodingOperator::non_cartesian(traj.clone(), (12, 12), 2, None, NufftParams::default()).unwrap();
        check_adjoint(&op);
        let op = op.with_maps(Some(maps(2, 12, 12))).unwrap();
        check_adjoint(&op);
    }

    #[test]
    fn grid_trajectory_matches_cartesian_path() {
        let (t, c, h, w) = (2, 2, 8, 8);
        let coords = ndarray::Array3::from_shape_fn((t, h * w, 2), |(_, i, d)| {
            let v = if d == 0 { i / w } else { i % w };
            let n = if d == 0 { h } else { w };
            (v as f64 - (n / 2) as f64) / n as f64
        });
        let dcf = Array2::from_elem((t, h * w), 1.0 / (h * w) as f64);
        let traj = Trajectory::new(
            coords,
            dcf,
            crate::traj::Readout {
                per_frame: 1,
                samples: h * w,
            },
        )
        .unwrap();
        let nc = EncodingOperator::non_cartesian(traj, (h, w), c, None, NufftParams::default()).unwrap();
        let ca = EncodingOperator::cartesian(Array2::from_elem((t, h), true), w, c, None).unwrap();
        let x = rand_c((t, c, h, w), 5);
        let (yn, yc) = (nc.forward(&x), ca.forward(&x));
        let rel = norm(&(&yn - &yc)) / norm(&yc);
        assert!(rel < 1e-5, "{rel}");
        let (zn, zc) = (nc.gridding_adjoint(&yc), ca.gridding_adjoint(&yc));
        let rel = norm(&(&zn - &zc)) / norm(&zc);
        assert!(rel < 1e-3, "{rel}");
        assert!(norm(&(&zc - &x)) / norm(&x) < 1e-12);
    }

    #[test]
    fn rejects_mismatched_maps() {
        let mask = Array2::from_elem((2, 8), true);
        assert!(EncodingOperator::cartesian(mask, 8, 3, Some(maps(2, 8, 8))).is_err());
    }

    #[test]
    fn normal_operator_matches_composition() {
        let cfg = RadialConfig {
            spokes: 5,
            samples: 16,
            angle_increment: 23.8,
        };
        let traj = radial_trajectory(2, &cfg).unwrap();
        for maps_opt in [None, Some(maps(2, 12, 10))] {
            let op =
                EncodingOperator::non_cartesian(traj.clone(), (12, 10), 2, maps_opt, NufftParams::default()).unwrap();
            let x = rand_c(op.image_dim(), 3);
            let a = op.normal(&x).unwrap();
            let b = op.adjoint(&op.forward(&x));
            assert!(norm(&(&a - &b)) / norm(&b) < 1e-5);
        }
    }
}
