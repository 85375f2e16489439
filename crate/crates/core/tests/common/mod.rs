//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use nalgebra::DMatrix;
use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_real(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut r = rng(seed);
    Array2::from_shape_fn((rows, cols), |_| r.random_range(-1.0..1.0))
}

pub fn random_complex(rows: usize, cols: usize, seed: u64) -> Array2<Complex64> {
    let mut r = rng(seed);
    Array2::from_shape_fn((rows, cols), |_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
}

/// Full 2-D DFT by the defining double sum.
pub fn naive_dft2(w: &Array2<f64>) -> Array2<Complex64> {
    let (m, n) = w.dim();
    Array2::from_shape_fn((m, n), |(u, v)| {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in 0..m {
            for b in 0..n {
                // reduce the phase index exactly before converting to an angle
                let k = ((u * a) % m * n + (v * b) % n * m) % (m * n);
                let t = -2.0 * PI * k as f64 / (m * n) as f64;
                acc += w[[a, b]] * Complex64::new(t.cos(), t.sin());
            }
        }
        acc
    })
}

/// Singular values from the Hermitian eigenproblem of the smaller Gram matrix.
pub fn gram_singular_values(m: &Array2<Complex64>) -> Vec<f64> {
    let (r, c) = m.dim();
    let a = DMatrix::from_fn(r, c, |i, j| nalgebra::Complex::new(m[[i, j]].re, m[[i, j]].im));
    let g = if r >= c { a.adjoint() * &a } else { &a * a.adjoint() };
    let mut ev: Vec<f64> = g.symmetric_eigen().eigenvalues.iter().map(|&x| x.max(0.0).sqrt()).collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev
}

pub fn fro(m: &Array2<Complex64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn fro_real(m: &Array2<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `sqrt(Σ C ⊙ |W − Q − L1·L2|²)` with an explicit triple loop for the product.
pub fn naive_weighted_error(
    w: &Array2<Complex64>,
    q: &Array2<Complex64>,
    l1: &Array2<Complex64>,
    l2: &Array2<Complex64>,
    c: Option<&Array2<f64>>,
) -> f64 {
    let (rows, cols) = w.dim();
    let mut acc = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let mut p = Complex64::new(0.0, 0.0);
            for k in 0..l1.ncols() {
                p += l1[[i, k]] * l2[[k, j]];
            }
            let e = (w[[i, j]] - q[[i, j]] - p).norm_sqr();
            acc += c.map_or(1.0, |c| c[[i, j]]) * e;
        }
    }
    acc.sqrt()
}

/// Entries of the full spectrum from the half spectrum by conjugate symmetry.
pub fn mirror(half: &Array2<Complex64>, n: usize) -> Array2<Complex64> {
    let m = half.nrows();
    Array2::from_shape_fn((m, n), |(u, v)| {
        if v <= n / 2 {
            half[[u, v]]
        } else {
            half[[(m - u) % m, n - v]].conj()
        }
    })
}
