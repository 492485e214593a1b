//! Small dense Hermitian eigenproblems (cyclic complex Jacobi).

use ndarray::{Array1, Array2};
use num_complex::Complex;

use crate::scalar::Real;

/// Eigen-decomposition `A = V diag(λ) Vᴴ` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    /// Eigenvalues in descending order.
    pub values: Array1<T>,
    /// Orthonormal eigenvectors, one per column, matching `values`.
    pub vectors: Array2<Complex<T>>,
}

/// Jacobi eigen-decomposition of a Hermitian matrix. Only the upper triangle
/// is trusted; the lower triangle is taken as its conjugate.
///
/// Each eigenvector is phase-normalized so that its largest-magnitude entry
/// is real and positive, which makes the output deterministic.
pub fn hermitian_eigen<T: Real>(matrix: &Array2<Complex<T>>) -> HermitianEigen<T> {
    let n = matrix.nrows();
    assert_eq!(n, matrix.ncols(), "matrix must be square");
    let zero = Complex::new(T::zero(), T::zero());
    let mut a = Array2::from_shape_fn((n, n), |(i, j)| {
        if i < j {
            matrix[[i, j]]
        } else if i > j {
            matrix[[j, i]].conj()
        } else {
            Complex::new(matrix[[i, i]].re, T::zero())
        }
    });
    let mut v = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j {
            Complex::new(T::one(), T::zero())
        } else {
            zero
        }
    });

    let eps = T::epsilon();
    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]].norm_sqr())
            .sum();
        let diag: T = (0..n).map(|i| a[[i, i]].re * a[[i, i]].re).sum();
        if off <= eps * eps * diag || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let g = a[[p, q]];
                let mag = g.norm();
                if mag == T::zero() {
                    continue;
                }
                let app = a[[p, p]].re;
                let aqq = a[[q, q]].re;
                // Phase that makes the pivot real, then a real Jacobi rotation.
                let phase = g / mag;
                let two = T::one() + T::one();
                let tau = (aqq - app) / (two * mag);
                let t = if tau >= T::zero() {
                    T::one() / (tau + (T::one() + tau * tau).sqrt())
                } else {
                    -T::one() / (-tau + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                // Unitary acting on columns p, q.
                let upp = Complex::new(c, T::zero());
                let uqp = phase.conj() * (-s);
                let upq = Complex::new(s, T::zero());
                let uqq = phase.conj() * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = akp * upp + akq * uqp;
                    a[[k, q]] = akp * upq + akq * uqq;
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = vkp * upp + vkq * uqp;
                    v[[k, q]] = vkp * upq + vkq * uqq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = upp.conj() * apk + uqp.conj() * aqk;
                    a[[q, k]] = upq.conj() * apk + uqq.conj() * aqk;
                }
                a[[p, q]] = zero;
                a[[q, p]] = zero;
                a[[p, p]] = Complex::new(a[[p, p]].re, T::zero());
                a[[q, q]] = Complex::new(a[[q, q]].re, T::zero());
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[[j, j]]
            .re
            .partial_cmp(&a[[i, i]].re)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = Array1::from_iter(order.iter().map(|&i| a[[i, i]].re));
    let mut vectors = Array2::from_elem((n, n), zero);
    for (dst, &src) in order.iter().enumerate() {
        let col = v.column(src);
        let pivot = col
            .iter()
            .copied()
            .fold(zero, |best, z| if z.norm() > best.norm() { z } else { best });
        let rot = if pivot.norm() > T::zero() {
            pivot.conj() / pivot.norm()
        } else {
            Complex::new(T::one(), T::zero())
        };
        for k in 0..n {
            vectors[[k, dst]] = col[k] * rot;
        }
    }
    HermitianEigen { values, vectors }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn random_hermitian(n: usize, seed: u64) -> Array2<Complex<f64>> {
        let mut rng = rng_from_seed(seed);
        let b = Array2::from_shape_simple_fn((n + 3, n), || {
            Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        // Gram matrix BᴴB.
        Array2::from_shape_fn((n, n), |(i, j)| (0..n + 3).map(|k| b[[k, i]].conj() * b[[k, j]]).sum())
    }

    #[test]
    fn residuals_and_orthonormality() {
        for &n in &[1usize, 2, 5, 12, 30] {
            let a = random_hermitian(n, n as u64);
            let e = hermitian_eigen(&a);
            let scale = e.values[0].abs().max(1.0);
            for j in 0..n {
                for i in 0..n {
                    let av: Complex<f64> = (0..n).map(|k| a[[i, k]] * e.vectors[[k, j]]).sum();
                    assert!((av - e.vectors[[i, j]] * e.values[j]).norm() < 1e-10 * scale);
                    let dot: Complex<f64> = (0..n).map(|k| e.vectors[[k, i]].conj() * e.vectors[[k, j]]).sum();
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((dot - expect).norm() < 1e-12);
                }
            }
            assert!(e.values.windows(2).into_iter().all(|w| w[0] >= w[1]));
            let trace: f64 = (0..n).map(|i| a[[i, i]].re).sum();
            assert!((e.values.sum() - trace).abs() < 1e-10 * scale);
        }
    }

    #[test]
    fn diagonal_input() {
        let mut a = Array2::from_elem((3, 3), Complex::new(0.0, 0.0));
        a[[0, 0]] = Complex::new(1.0, 0.0);
        a[[1, 1]] = Complex::new(3.0, 0.0);
        a[[2, 2]] = Complex::new(2.0, 0.0);
        let e = hermitian_eigen(&a);
        assert_eq!(e.values.to_vec(), vec![3.0, 2.0, 1.0]);
        assert_eq!(e.vectors[[1, 0]], Complex::new(1.0, 0.0));
    }
}
