//! Real-to-complex 2-D DFT with conjugate-symmetry reduction.
//!
//! Forward transforms are unnormalized, `X[u,v] = Σ W[m,n] e^{-2πi(um/M + vn/N)}`;
//! the inverse carries the `1/(M·N)` factor. Only the `M × (N/2 + 1)` half
//! spectrum is kept. Columns `0` (DC) and `N/2` (Nyquist) are self-mirrored and
//! must satisfy `X[u,v] == conj(X[(M-u) mod M, v])`.

use ndarray::{Array2, ArrayView2};
use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::par;

/// Relative tolerance on DC/Nyquist symmetry accepted by [`inverse_dft2`].
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// How [`forward_dft2_with`] treats an odd number of columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WidthMode {
    /// Reject odd widths.
    #[default]
    Strict,
    /// Append one zero column and remember the original width.
    ZeroPad,
}

/// Half spectrum of a real `rows × cols` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpectrum {
    rows: usize,
    /// Even transform width (after any padding).
    cols: usize,
    /// Width of the spatial matrix before padding.
    original_cols: usize,
    data: Array2<Complex64>,
}

impl HalfSpectrum {
    /// Wraps raw half-spectrum data for a transform of width `cols` (even).
    /// `original_cols` is either `cols` or `cols - 1` for padded inputs.
    pub fn new(cols: usize, original_cols: usize, data: Array2<Complex64>) -> Result<Self> {
        let rows = data.nrows();
        if rows == 0 || cols < 2 || !cols.is_multiple_of(2) {
            return Err(Error::InvalidParam(format!(
                "half spectrum needs rows >= 1 and an even width >= 2, got {rows}x{cols}"
            )));
        }
        if original_cols != cols && original_cols + 1 != cols {
            return Err(Error::InvalidParam(format!(
                "original width {original_cols} incompatible with transform width {cols}"
            )));
        }
        let expected = (rows, cols / 2 + 1);
        if data.dim() != expected {
            return Err(Error::ShapeMismatch {
                expected,
                found: data.dim(),
            });
        }
        Ok(HalfSpectrum {
            rows,
            cols,
            original_cols,
            data,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Transform width (even).
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn original_cols(&self) -> usize {
        self.original_cols
    }

    pub fn half_cols(&self) -> usize {
        self.cols / 2 + 1
    }

    pub fn data(&self) -> &Array2<Complex64> {
        &self.data
    }

    pub fn into_data(self) -> Array2<Complex64> {
        self.data
    }

    /// Largest violation of the DC/Nyquist self-mirror constraints.
    pub fn symmetry_deviation(&self) -> f64 {
        let mut worst = 0.0f64;
        for v in self.self_mirrored_cols() {
            for u in 0..self.rows {
                let mirror = (self.rows - u) % self.rows;
                let d = (self.data[[u, v]] - self.data[[mirror, v]].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Projects the DC and Nyquist columns onto their conjugate-symmetry
    /// constraint. Mirror pairs are replaced by their conjugate average and
    /// self-paired entries lose their imaginary part; this is the nearest
    /// valid spectrum in Frobenius norm.
    pub fn project_symmetric(&mut self) {
        for v in self.self_mirrored_cols() {
            for u in 0..self.rows {
                let mirror = (self.rows - u) % self.rows;
                if mirror < u {
                    continue;
                }
                if mirror == u {
                    self.data[[u, v]].im = 0.0;
                } else {
                    let avg = (self.data[[u, v]] + self.data[[mirror, v]].conj()) * 0.5;
                    self.data[[u, v]] = avg;
                    self.data[[mirror, v]] = avg.conj();
                }
            }
        }
    }

    /// `Σ |X|²` over the full spectrum, from the half spectrum alone.
    pub fn full_energy(&self) -> f64 {
        let last = self.half_cols() - 1;
        self.data
            .indexed_iter()
            .map(|((_, v), z)| {
                let w = if v == 0 || v == last { 1.0 } else { 2.0 };
                w * z.norm_sqr()
            })
            .sum()
    }

    fn self_mirrored_cols(&self) -> [usize; 2] {
        [0, self.half_cols() - 1]
    }
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    FftPlanner::new().plan_fft(len, direction)
}

/// In-place FFT of every row of a row-major `rows × width` buffer.
fn fft_rows(buf: &mut [Complex64], width: usize, direction: FftDirection) {
    let fft = plan(width, direction);
    par::for_each_row_mut(buf, width, |_, row| fft.process(row));
}

fn transpose(buf: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); buf.len()];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = buf[i * cols + j];
        }
    }
    out
}

/// In-place FFT along both axes of a row-major `rows × cols` buffer.
fn fft2(buf: Vec<Complex64>, rows: usize, cols: usize, direction: FftDirection) -> Vec<Complex64> {
    let mut buf = buf;
    fft_rows(&mut buf, cols, direction);
    let mut t = transpose(&buf, rows, cols);
    fft_rows(&mut t, rows, direction);
    transpose(&t, cols, rows)
}

/// Unnormalized forward 2-D DFT of a real matrix with an even number of columns.
pub fn forward_dft2(w: &Array2<f64>) -> Result<HalfSpectrum> {
    forward_dft2_with(w, WidthMode::Strict)
}

pub fn forward_dft2_with(w: &Array2<f64>, mode: WidthMode) -> Result<HalfSpectrum> {
    let (rows, original_cols) = w.dim();
    if rows == 0 || original_cols == 0 {
        return Err(Error::InvalidParam("empty matrix".into()));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let cols = match (original_cols % 2, mode) {
        (0, _) => original_cols,
        (_, WidthMode::Strict) => return Err(Error::OddWidth(original_cols)),
        (_, WidthMode::ZeroPad) => original_cols + 1,
    };
    let half = cols / 2 + 1;

    // rows first, real input, keep the non-redundant half of each row
    let mut rowbuf = vec![Complex64::default(); rows * cols];
    for ((i, j), &x) in w.indexed_iter() {
        rowbuf[i * cols + j] = Complex64::new(x, 0.0);
    }
    fft_rows(&mut rowbuf, cols, FftDirection::Forward);
    let mut halfbuf = Vec::with_capacity(rows * half);
    for row in rowbuf.chunks(cols) {
        halfbuf.extend_from_slice(&row[..half]);
    }
    // then columns
    let mut t = transpose(&halfbuf, rows, half);
    fft_rows(&mut t, rows, FftDirection::Forward);
    let data = Array2::from_shape_vec((rows, half), transpose(&t, half, rows))
        .expect("buffer sized to shape");
    HalfSpectrum::new(cols, original_cols, data)
}

/// Inverse of [`forward_dft2`]. Fails if the DC/Nyquist columns are not
/// conjugate-symmetric to within [`SYMMETRY_TOLERANCE`] of the spectrum norm.
pub fn inverse_dft2(s: &HalfSpectrum) -> Result<Array2<f64>> {
    let norm = s.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let deviation = s.symmetry_deviation();
    let tolerance = SYMMETRY_TOLERANCE * norm;
    if deviation > tolerance {
        return Err(Error::SymmetryViolation {
            deviation,
            tolerance,
        });
    }
    let (rows, cols) = (s.rows, s.cols);
    let full = expand_full(s);
    let buf: Vec<Complex64> = full.iter().copied().collect();
    let out = fft2(buf, rows, cols, FftDirection::Inverse);
    let scale = 1.0 / (rows * cols) as f64;
    let w = Array2::from_shape_fn((rows, s.original_cols), |(i, j)| out[i * cols + j].re * scale);
    Ok(w)
}

/// Rebuilds the full `rows × cols` spectrum from the half spectrum using
/// `X[u,v] = conj(X[(M-u) mod M, (N-v) mod N])`.
pub fn expand_full(s: &HalfSpectrum) -> Array2<Complex64> {
    let (rows, cols, half) = (s.rows, s.cols, s.half_cols());
    Array2::from_shape_fn((rows, cols), |(u, v)| {
        if v < half {
            s.data[[u, v]]
        } else {
            s.data[[(rows - u) % rows, cols - v]].conj()
        }
    })
}

/// Max over all `(u,v)` of `|F[u,v] - conj(F[(M-u) mod M, (N-v) mod N])|`.
pub fn check_conjugate_symmetry(f: ArrayView2<Complex64>) -> f64 {
    let (m, n) = f.dim();
    f.indexed_iter()
        .map(|((u, v), z)| (z - f[[(m - u) % m, (n - v) % n]].conj()).norm())
        .fold(0.0, f64::max)
}

/// Unnormalized forward 2-D DFT of a complex matrix (full spectrum).
pub fn forward_dft2_complex(x: &Array2<Complex64>) -> Array2<Complex64> {
    let (rows, cols) = x.dim();
    let buf: Vec<Complex64> = x.iter().copied().collect();
    let out = fft2(buf, rows, cols, FftDirection::Forward);
    Array2::from_shape_vec((rows, cols), out).expect("buffer sized to shape")
}
