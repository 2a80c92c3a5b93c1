//! Small dense solvers for the beamforming iterations.

use num_complex::Complex;

use crate::Real;

/// `aᴴ b`.
pub fn inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

pub fn norm_sqr<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().map(|x| x.norm_sqr()).sum()
}

/// Lower Cholesky factor of a Hermitian `n × n` row-major matrix, or `None` when it is not
/// numerically positive definite.
pub fn cholesky<T: Real>(a: &[Complex<T>], n: usize) -> Option<Vec<Complex<T>>> {
    let zero = Complex::new(T::zero(), T::zero());
    let mut l = vec![zero; n * n];
    for j in 0..n {
        let mut d = a[j * n + j].re;
        for k in 0..j {
            d = d - l[j * n + k].norm_sqr();
        }
        if !(d > T::zero()) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        l[j * n + j] = Complex::new(d, T::zero());
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / d;
        }
    }
    Some(l)
}

/// Solves `L Lᴴ x = b` given the factor from [`cholesky`].
pub fn cholesky_solve<T: Real>(l: &[Complex<T>], n: usize, b: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] = y[i] - l[i * n + k] * y[k];
        }
        y[i] = y[i] / l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] = y[i] - l[k * n + i].conj() * y[k];
        }
        y[i] = y[i] / l[i * n + i];
    }
    y
}

/// Solves `A x = b` for real `n × n` row-major `A` with partial pivoting; `None` if singular.
pub fn solve<T: Real>(mut a: Vec<T>, mut b: Vec<T>, n: usize) -> Option<Vec<T>> {
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i * n + c].abs().partial_cmp(&a[j * n + c].abs()).unwrap_or(std::cmp::Ordering::Equal))?;
        let pivot = a[p * n + c];
        if !(pivot.abs() > T::epsilon()) || !pivot.is_finite() {
            return None;
        }
        if p != c {
            for k in 0..n {
                a.swap(p * n + k, c * n + k);
            }
            b.swap(p, c);
        }
        for r in c + 1..n {
            let f = a[r * n + c] / pivot;
            if f == T::zero() {
                continue;
            }
            for k in c..n {
                a[r * n + k] = a[r * n + k] - f * a[c * n + k];
            }
            b[r] = b[r] - f * b[c];
        }
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s = s - a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    Some(b)
}
