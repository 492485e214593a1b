use ndarray::{s, Array3, Array4, Zip};
use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::combine_magnitude;
use super::operator::{EncodingOperator, Sampling};
use crate::error::{Error, Result};
use crate::scalar::{czero, Real};
use crate::series::MagnitudeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsConfig {
    /// Weight of the temporal TV term, relative to data scaled so max |zero-filled| = 1.
    pub lambda: f64,
    /// Outer ADMM iterations.
    pub iterations: usize,
    /// ADMM penalty.
    pub rho: f64,
    /// Conjugate-gradient steps per x-update when no closed form applies.
    pub cg_iterations: usize,
    /// Stop once the relative change of x falls below this (0 runs all iterations).
    pub tolerance: f64,
}

impl Default for CsConfig {
    fn default() -> Self {
        Self {
            lambda: 5e-4,
            iterations: 30,
            rho: 0.05,
            cg_iterations: 10,
            tolerance: 0.0,
        }
    }
}

impl CsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda must be finite and ≥ 0, got {}",
                self.lambda
            )));
        }
        if self.iterations == 0 {
            return Err(Error::invalid("iterations must be at least 1"));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::invalid(format!("rho must be positive, got {}", self.rho)));
        }
        if self.cg_iterations == 0 {
            return Err(Error::invalid("cg_iterations must be at least 1"));
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::invalid("tolerance must be ≥ 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CsResult<T: Real = f64> {
    pub image: MagnitudeSeries<T>,
    /// Complex estimate (`T×K×H×W`) in the units of the input data.
    pub solution: Array4<Complex<T>>,
    /// Objective of the normalized problem: the initial estimate, then one
    /// value per outer iteration.
    pub objective: Vec<f64>,
    /// Factor the data were divided by before solving.
    pub scale: f64,
}

type C<T> = Complex<T>;

/// Forward temporal differences `x[t+1] - x[t]`.
fn diff<T: Real>(x: &Array4<C<T>>) -> Array4<C<T>> {
    let n = x.dim().0;
    &x.slice(s![1.., .., .., ..]) - &x.slice(s![..n - 1, .., .., ..])
}

/// Adjoint of [`diff`].
fn diff_adjoint<T: Real>(d: &Array4<C<T>>) -> Array4<C<T>> {
    let (m, k, h, w) = d.dim();
    let mut out = Array4::from_elem((m + 1, k, h, w), czero());
    out.slice_mut(s![..m, .., .., ..]).zip_mut_with(d, |o, &v| *o -= v);
    out.slice_mut(s![1.., .., .., ..]).zip_mut_with(d, |o, &v| *o += v);
    out
}

fn dot<T: Real>(a: &Array4<C<T>>, b: &Array4<C<T>>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x.re * y.re + x.im * y.im).as_f64()).sum()
}

fn l1<T: Real>(a: &Array4<C<T>>) -> f64 {
    a.iter().map(|v| v.norm().as_f64()).sum()
}

/// `½‖E x − y‖² + λ Σ |x[t+1] − x[t]|`.
pub fn temporal_tv_objective<T: Real>(
    op: &EncodingOperator<T>,
    x: &Array4<C<T>>,
    y: &Array3<C<T>>,
    lambda: f64,
) -> f64 {
    let r = op.forward(x);
    let fit: f64 = r.iter().zip(y).map(|(a, b)| (*a - *b).norm_sqr().as_f64()).sum();
    0.5 * fit + lambda * l1(&diff(x))
}

fn soft_threshold<T: Real>(v: C<T>, tau: T) -> C<T> {
    let m = v.norm();
    if m <= tau {
        czero()
    } else {
        v * ((m - tau) / m)
    }
}

/// Solve the temporal system of one k-space location in place:
/// `(diag(m) + ρ DᴴD) x = b`. Locations never sampled get the zero-mean
/// solution of the singular system `ρ DᴴD x = b`.
fn solve_lane(sampled: &[bool], rho: f64, b: &mut [Complex<f64>]) {
    let n = b.len();
    if !sampled.iter().any(|&m| m) {
        // DᴴD x = b/ρ  ⇔  D x = g with g[t] = -Σ_{s≤t} b[s]/ρ.
        let mut g = Complex::new(0.0, 0.0);
        let mut x = Complex::new(0.0, 0.0);
        let mut mean = Complex::new(0.0, 0.0);
        let first = b[0];
        let mut prev_b = first;
        b[0] = x;
        for t in 1..n {
            g -= prev_b / rho;
            x += g;
            prev_b = b[t];
            b[t] = x;
            mean += x;
        }
        mean /= n as f64;
        b.iter_mut().for_each(|v| *v -= mean);
        return;
    }
    let off = -rho;
    let mut cp = vec![0.0; n];
    let mut prev = 0.0;
    for t in 0..n {
        let lap = if n == 1 {
            0.0
        } else if t == 0 || t == n - 1 {
            1.0
        } else {
            2.0
        };
        let diag = f64::from(u8::from(sampled[t])) + rho * lap;
        let denom = diag - off * prev;
        let carry = if t == 0 { Complex::new(0.0, 0.0) } else { b[t - 1] * off };
        b[t] = (b[t] - carry) / denom;
        cp[t] = off / denom;
        prev = cp[t];
    }
    for t in (0..n - 1).rev() {
        let next = b[t + 1];
        b[t] -= next * cp[t];
    }
}

/// Solve `(Eᴴ E + ρ DᴴD) x = b` exactly for per-coil Cartesian sampling: in
/// k-space the system splits into one tridiagonal `T×T` system per sample.
fn cartesian_solve<T: Real>(mask: &ndarray::Array2<bool>, b: &Array4<C<T>>, rho: f64) -> Array4<C<T>> {
    let (n, k, h, w) = b.dim();
    let mut xk = b.clone();
    crate::series::transform_all(&mut xk, true);
    let lanes: Vec<(usize, usize)> = (0..k).flat_map(|c| (0..h).map(move |l| (c, l))).collect();
    let solved: Vec<Vec<Complex<f64>>> = lanes
        .par_iter()
        .map(|&(c, l)| {
            let sampled: Vec<bool> = (0..n).map(|t| mask[[t, l]]).collect();
            let mut out = vec![Complex::new(0.0, 0.0); n * w];
            let mut lane = vec![Complex::new(0.0, 0.0); n];
            for x in 0..w {
                for (t, v) in lane.iter_mut().enumerate() {
                    let z = xk[[t, c, l, x]];
                    *v = Complex::new(z.re.as_f64(), z.im.as_f64());
                }
                solve_lane(&sampled, rho, &mut lane);
                for (t, v) in lane.iter().enumerate() {
                    out[t * w + x] = *v;
                }
            }
            out
        })
        .collect();
    for (&(c, l), lane) in lanes.iter().zip(&solved) {
        for t in 0..n {
            for x in 0..w {
                let v = lane[t * w + x];
                xk[[t, c, l, x]] = Complex::new(T::of(v.re), T::of(v.im));
            }
        }
    }
    crate::series::transform_all(&mut xk, false);
    xk
}

/// `a += ρ DᴴD v`.
fn add_temporal_laplacian<T: Real>(a: &mut Array4<C<T>>, v: &Array4<C<T>>, rho: T) {
    let n = v.dim().0;
    for t in 0..n {
        let mut at = a.index_axis_mut(ndarray::Axis(0), t);
        let vt = v.index_axis(ndarray::Axis(0), t);
        if t > 0 {
            let vp = v.index_axis(ndarray::Axis(0), t - 1);
            Zip::from(&mut at)
                .and(&vt)
                .and(&vp)
                .for_each(|o, &c, &p| *o += (c - p) * rho);
        }
        if t + 1 < n {
            let vn = v.index_axis(ndarray::Axis(0), t + 1);
            Zip::from(&mut at)
                .and(&vt)
                .and(&vn)
                .for_each(|o, &c, &q| *o += (c - q) * rho);
        }
    }
}

/// Conjugate gradient on `(Eᴴ E + ρ DᴴD) x = b`, warm-started from `x`.
fn cg_solve<T: Real>(
    op: &EncodingOperator<T>,
    b: &Array4<C<T>>,
    x: &mut Array4<C<T>>,
    rho: f64,
    iterations: usize,
) -> Result<()> {
    let rho_t = T::of(rho);
    let apply = |v: &Array4<C<T>>, out: &mut Array4<C<T>>| -> Result<()> {
        op.normal_into(v, out)?;
        add_temporal_laplacian(out, v, rho_t);
        Ok(())
    };
    let mut ap = Array4::from_elem(x.dim(), czero());
    apply(x, &mut ap)?;
    let mut r = b.clone();
    r.zip_mut_with(&ap, |ri, &ai| *ri -= ai);
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let bb = dot(b, b).max(f64::MIN_POSITIVE);
    for _ in 0..iterations {
        if rr <= 1e-30 * bb {
            break;
        }
        apply(&p, &mut ap)?;
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            break;
        }
        let alpha = T::of(rr / pap);
        let mut rr_new = 0.0;
        Zip::from(&mut *x)
            .and(&mut r)
            .and(&p)
            .and(&ap)
            .for_each(|xi, ri, &pi, &ai| {
                *xi += pi * alpha;
                *ri -= ai * alpha;
                rr_new += ri.norm_sqr().as_f64();
            });
        let beta = T::of(rr_new / rr);
        Zip::from(&mut p).and(&r).for_each(|pi, &ri| *pi = ri + *pi * beta);
        rr = rr_new;
    }
    Ok(())
}

/// Temporal-TV compressed sensing by ADMM on `z = D x`.
///
/// Data are divided by the peak of the zero-filled magnitude before solving
/// and the solution is scaled back afterwards.
pub fn cs_temporal_tv<T: Real>(y: &Array3<C<T>>, op: &EncodingOperator<T>, cfg: &CsConfig) -> Result<CsResult<T>> {
    cfg.validate()?;
    op.check_data(y)?;
    if op.frames() < 2 {
        return Err(Error::invalid(
            "temporal TV needs at least two frames; reconstruct a single frame with the zero-filled estimate",
        ));
    }
    let zf = op.gridding_adjoint(y);
    let scale = combine_magnitude(&zf).max().as_f64();
    if !scale.is_finite() {
        return Err(Error::Numerical("non-finite zero-filled estimate".into()));
    }
    if scale == 0.0 {
        return Ok(CsResult {
            image: combine_magnitude(&zf),
            solution: zf,
            objective: vec![0.0],
            scale: 0.0,
        });
    }
    let inv = T::of(1.0 / scale);
    let y = y.mapv(|v| v * inv);
    let mut x = zf.mapv(|v| v * inv);
    let eh_y = op.adjoint(&y);
    let mut z = diff(&x);
    let mut u = Array4::from_elem(z.dim(), czero());
    let rho_t = T::of(cfg.rho);
    let tau = T::of(cfg.lambda / cfg.rho);
    let mut objective = vec![temporal_tv_objective(op, &x, &y, cfg.lambda)];
    for _ in 0..cfg.iterations {
        let mut b = diff_adjoint(&(&z - &u));
        b.mapv_inplace(|v| v * rho_t);
        b += &eh_y;
        let previous = x.clone();
        match (op.sampling(), op.maps()) {
            (Sampling::Cartesian(mask), None) => x = cartesian_solve(mask, &b, cfg.rho),
            _ => cg_solve(op, &b, &mut x, cfg.rho, cfg.cg_iterations)?,
        }
        let dx = diff(&x);
        Zip::from(&mut z)
            .and(&dx)
            .and(&u)
            .for_each(|zi, &d, &ui| *zi = soft_threshold(d + ui, tau));
        Zip::from(&mut u).and(&dx).and(&z).for_each(|ui, &d, &zi| *ui += d - zi);
        objective.push(temporal_tv_objective(op, &x, &y, cfg.lambda));
        if cfg.tolerance > 0.0 {
            let change = (&x - &previous)
                .iter()
                .map(|v| v.norm_sqr().as_f64())
                .sum::<f64>()
                .sqrt();
            let size = x.iter().map(|v| v.norm_sqr().as_f64()).sum::<f64>().sqrt();
            if change <= cfg.tolerance * size.max(f64::MIN_POSITIVE) {
                break;
            }
        }
    }
    if x.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::Numerical("CS iterate diverged".into()));
    }
    let back = T::of(scale);
    x.mapv_inplace(|v| v * back);
    Ok(CsResult {
        image: combine_magnitude(&x),
        solution: x,
        objective,
        scale,
    })
}
