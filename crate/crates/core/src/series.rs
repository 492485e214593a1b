//! Array containers for dynamic image and k-space data.
//!
//! Axis order is always time first: `T×H×W` for single-channel series and
//! `T×C×H×W` for multi-coil data. K-space arrays use the centered layout of
//! [`crate::fft::Fft2`] (DC at `[H/2, W/2]`).

use ndarray::{Array3, Array4, ArrayView3, Axis, Zip};
use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::scalar::Real;

/// `T×H×W` complex dynamic image.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImageSeries<T: Real = f64> {
    pub data: Array3<Complex<T>>,
    /// Informational only.
    pub pixel_spacing_mm: Option<f64>,
}

impl<T: Real> ComplexImageSeries<T> {
    pub fn new(data: Array3<Complex<T>>) -> Result<Self> {
        let (t, h, w) = data.dim();
        if t == 0 || h == 0 || w == 0 {
            return Err(Error::shape(format!("empty image series {t}x{h}x{w}")));
        }
        if data.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid("image series contains non-finite values"));
        }
        Ok(Self {
            data,
            pixel_spacing_mm: None,
        })
    }

    pub fn zeros(t: usize, h: usize, w: usize) -> Self {
        Self {
            data: Array3::from_elem((t, h, w), Complex::new(T::zero(), T::zero())),
            pixel_spacing_mm: None,
        }
    }

    pub fn dim(&self) -> (usize, usize, usize) {
        self.data.dim()
    }

    pub fn frames(&self) -> usize {
        self.data.dim().0
    }

    pub fn magnitude(&self) -> MagnitudeSeries<T> {
        MagnitudeSeries {
            data: self.data.mapv(|v| v.norm()),
        }
    }
}

/// `T×H×W` real magnitude series.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeSeries<T: Real = f64> {
    pub data: Array3<T>,
}

impl<T: Real> MagnitudeSeries<T> {
    pub fn new(data: Array3<T>) -> Self {
        Self { data }
    }

    pub fn dim(&self) -> (usize, usize, usize) {
        self.data.dim()
    }

    pub fn frames(&self) -> usize {
        self.data.dim().0
    }

    pub fn view(&self) -> ArrayView3<'_, T> {
        self.data.view()
    }

    pub fn max(&self) -> T {
        self.data.iter().fold(T::neg_infinity(), |m, &v| m.max(v))
    }

    pub fn min(&self) -> T {
        self.data.iter().fold(T::infinity(), |m, &v| m.min(v))
    }
}

/// `C×H×W` complex coil sensitivities.
#[derive(Debug, Clone, PartialEq)]
pub struct CoilMapSet<T: Real = f64> {
    pub maps: Array3<Complex<T>>,
}

impl<T: Real> CoilMapSet<T> {
    pub fn n_coils(&self) -> usize {
        self.maps.dim().0
    }

    pub fn image_shape(&self) -> (usize, usize) {
        let (_, h, w) = self.maps.dim();
        (h, w)
    }

    /// Pixelwise root-sum-of-squares over coils.
    pub fn rss(&self) -> ndarray::Array2<T> {
        self.maps
            .map_axis(Axis(0), |c| c.iter().map(|v| v.norm_sqr()).sum::<T>().sqrt())
    }
}

/// `T×C×H×W` complex multi-coil images.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiCoilImageSeries<T: Real = f64> {
    pub data: Array4<Complex<T>>,
}

/// `T×C×H×W` complex multi-coil Cartesian k-space, DC at the array center.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiCoilKSpace<T: Real = f64> {
    pub data: Array4<Complex<T>>,
}

macro_rules! multicoil_common {
    ($ty:ident) => {
        impl<T: Real> $ty<T> {
            pub fn new(data: Array4<Complex<T>>) -> Self {
                Self { data }
            }

            /// `(T, C, H, W)`.
            pub fn dim(&self) -> (usize, usize, usize, usize) {
                self.data.dim()
            }

            pub fn frames(&self) -> usize {
                self.data.dim().0
            }

            pub fn n_coils(&self) -> usize {
                self.data.dim().1
            }

            pub fn image_shape(&self) -> (usize, usize) {
                let (_, _, h, w) = self.data.dim();
                (h, w)
            }

            pub fn is_finite(&self) -> bool {
                self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
            }
        }
    };
}

multicoil_common!(MultiCoilImageSeries);
multicoil_common!(MultiCoilKSpace);

impl<T: Real> MultiCoilImageSeries<T> {
    /// Centered orthonormal FFT of every frame and coil.
    pub fn to_kspace(&self) -> MultiCoilKSpace<T> {
        let mut data = self.data.clone();
        transform_all(&mut data, true);
        MultiCoilKSpace { data }
    }
}

impl<T: Real> MultiCoilKSpace<T> {
    /// Centered orthonormal inverse FFT of every frame and coil.
    pub fn to_images(&self) -> MultiCoilImageSeries<T> {
        let mut data = self.data.clone();
        transform_all(&mut data, false);
        MultiCoilImageSeries { data }
    }
}

pub(crate) fn transform_all<T: Real>(data: &mut Array4<Complex<T>>, forward: bool) {
    let (_, _, h, w) = data.dim();
    let plan = Fft2::new(h, w);
    data.axis_iter_mut(Axis(0)).into_par_iter().for_each(|mut frame| {
        for coil in frame.axis_iter_mut(Axis(0)) {
            if forward {
                plan.forward(coil);
            } else {
                plan.inverse(coil);
            }
        }
    });
}

/// Pixelwise product of every frame with every coil map.
pub(crate) fn modulate<T: Real>(series: &Array3<Complex<T>>, maps: &Array3<Complex<T>>) -> Array4<Complex<T>> {
    let (t, h, w) = series.dim();
    let c = maps.dim().0;
    let mut out = Array4::from_elem((t, c, h, w), Complex::new(T::zero(), T::zero()));
    for (mut frame_out, frame) in out.axis_iter_mut(Axis(0)).zip(series.axis_iter(Axis(0))) {
        for (coil_out, map) in frame_out.axis_iter_mut(Axis(0)).zip(maps.axis_iter(Axis(0))) {
            Zip::from(coil_out)
                .and(&frame)
                .and(&map)
                .for_each(|o, &x, &s| *o = x * s);
        }
    }
    out
}
