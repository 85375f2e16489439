//! Alternating low-rank plus polar-quantized approximation of a half spectrum,
//! with optional diagonal calibration of the low-rank step.

use log::warn;
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::csvd::{complex_svd, truncate_factors, LowRankFactors};
use crate::error::{Error, Result};
use crate::par;
use crate::polarquant::{check_bits, polar_dequantize, polar_quantize, PolarCode};
use crate::spectral::{forward_dft2_with, inverse_dft2, HalfSpectrum, WidthMode};

/// Above this diagonal-dominance ratio the row/column-mean approximation of a
/// calibration matrix is considered unreliable; decomposition still proceeds.
pub const EPSILON_GUARD: f64 = 0.35;

/// Non-negative calibration weights in half-spectrum shape, with the derived
/// row/column means of their square roots.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationMatrix {
    c: Array2<f64>,
    sqrt_c: Array2<f64>,
    d_row: Vec<f64>,
    d_col: Vec<f64>,
    epsilon: Option<f64>,
}

impl CalibrationMatrix {
    pub fn weights(&self) -> &Array2<f64> {
        &self.c
    }

    pub fn sqrt_weights(&self) -> &Array2<f64> {
        &self.sqrt_c
    }

    /// Row means of `√C`.
    pub fn d_row(&self) -> &[f64] {
        &self.d_row
    }

    /// Column means of `√C`.
    pub fn d_col(&self) -> &[f64] {
        &self.d_col
    }

    /// Diagonal-dominance ratio, present only for square weights.
    pub fn epsilon(&self) -> Option<f64> {
        self.epsilon
    }

    pub fn dim(&self) -> (usize, usize) {
        self.c.dim()
    }

    /// Whether both diagonal scalings can be inverted.
    pub fn is_invertible(&self) -> bool {
        self.d_row.iter().chain(self.d_col.iter()).all(|&d| d > 0.0)
    }

    /// Rank-1 weights `C = outer(row, col)` from per-row and per-column
    /// second moments.
    pub fn from_second_moments(row: &[f64], col: &[f64]) -> Result<Self> {
        let c = Array2::from_shape_fn((row.len(), col.len()), |(i, j)| row[i] * col[j]);
        build_calibration(&c)
    }
}

pub fn build_calibration(c_raw: &Array2<f64>) -> Result<CalibrationMatrix> {
    let (rows, cols) = c_raw.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParam("empty calibration matrix".into()));
    }
    for ((i, j), &v) in c_raw.indexed_iter() {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::NegativeCalibration {
                row: i,
                col: j,
                value: v,
            });
        }
    }
    let sqrt_c = c_raw.mapv(f64::sqrt);
    let d_row = sqrt_c
        .rows()
        .into_iter()
        .map(|r| r.sum() / cols as f64)
        .collect();
    let d_col = sqrt_c
        .columns()
        .into_iter()
        .map(|c| c.sum() / rows as f64)
        .collect();
    let epsilon = if rows == cols {
        epsilon_dominance(c_raw).ok()
    } else {
        None
    };
    Ok(CalibrationMatrix {
        c: c_raw.clone(),
        sqrt_c,
        d_row,
        d_col,
        epsilon,
    })
}

/// `‖offdiag(C)‖_F / ‖diag(C)‖_F` for a square matrix.
pub fn epsilon_dominance(c: &Array2<f64>) -> Result<f64> {
    let (rows, cols) = c.dim();
    if rows != cols {
        return Err(Error::ShapeMismatch {
            expected: (rows, rows),
            found: (rows, cols),
        });
    }
    let (mut diag, mut off) = (0.0, 0.0);
    for ((i, j), &v) in c.indexed_iter() {
        if i == j {
            diag += v * v;
        } else {
            off += v * v;
        }
    }
    if diag == 0.0 {
        return Err(Error::ZeroDiagonal);
    }
    Ok((off / diag).sqrt())
}

fn check_calibration_shape(calib: &CalibrationMatrix, dim: (usize, usize)) -> Result<()> {
    if calib.dim() != dim {
        return Err(Error::ShapeMismatch {
            expected: dim,
            found: calib.dim(),
        });
    }
    Ok(())
}

/// Rank-`rank` factors of `r`.
///
/// Without calibration this is the truncated SVD of `r`. With calibration the
/// SVD is taken of `D_row · r · D_col` and the factors are unscaled afterwards,
/// so `D_row (r − L1 L2) D_col` is the best rank-`rank` approximation error of
/// the scaled matrix.
pub fn odc_decompose(
    r: &Array2<Complex64>,
    calib: Option<&CalibrationMatrix>,
    rank: usize,
) -> Result<LowRankFactors> {
    let max = r.nrows().min(r.ncols());
    if rank == 0 || rank > max {
        return Err(Error::RankOutOfRange { rank, max });
    }
    let Some(calib) = calib else {
        return truncate_factors(&complex_svd(r)?, rank);
    };
    check_calibration_shape(calib, r.dim())?;
    if !calib.is_invertible() {
        return Err(Error::InvalidParam(
            "calibration has a zero row or column mean".into(),
        ));
    }
    let (d_row, d_col) = (calib.d_row(), calib.d_col());
    let scaled = Array2::from_shape_fn(r.dim(), |(i, j)| r[[i, j]] * d_row[i] * d_col[j]);
    let mut f = truncate_factors(&complex_svd(&scaled)?, rank)?;
    for (i, mut row) in f.l1.rows_mut().into_iter().enumerate() {
        row.mapv_inplace(|z| z / d_row[i]);
    }
    for mut row in f.l2.rows_mut() {
        row.iter_mut()
            .zip(d_col)
            .for_each(|(z, &d)| *z /= d);
    }
    Ok(f)
}

/// Sums per-row partial sums in row order so results do not depend on the
/// thread count.
fn ordered_sum<F>(rows: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    par::map_range(rows, f).into_iter().sum()
}

/// Frobenius norm of `√C ⊙ |W − (Q + L1 L2)|`, or of the plain residual when
/// no calibration is given.
pub fn weighted_error(
    w: &Array2<Complex64>,
    q: &Array2<Complex64>,
    factors: &LowRankFactors,
    calib: Option<&CalibrationMatrix>,
) -> Result<f64> {
    let dim = w.dim();
    for found in [q.dim(), (factors.l1.nrows(), factors.l2.ncols())] {
        if found != dim {
            return Err(Error::ShapeMismatch {
                expected: dim,
                found,
            });
        }
    }
    if let Some(c) = calib {
        check_calibration_shape(c, dim)?;
    }
    let lr = factors.product();
    let sq = ordered_sum(dim.0, |i| {
        (0..dim.1)
            .map(|j| {
                let e = (w[[i, j]] - (q[[i, j]] + lr[[i, j]])).norm();
                let e = match calib {
                    Some(c) => c.sqrt_c[[i, j]] * e,
                    None => e,
                };
                e * e
            })
            .sum()
    });
    Ok(sq.sqrt())
}

/// `‖D_row |E| D_col‖_F`, the objective the calibrated low-rank step actually
/// minimizes.
pub fn surrogate_error(
    w: &Array2<Complex64>,
    q: &Array2<Complex64>,
    factors: &LowRankFactors,
    calib: &CalibrationMatrix,
) -> Result<f64> {
    check_calibration_shape(calib, w.dim())?;
    let lr = factors.product();
    let (d_row, d_col) = (calib.d_row(), calib.d_col());
    let sq = ordered_sum(w.nrows(), |i| {
        (0..w.ncols())
            .map(|j| {
                let e = (w[[i, j]] - (q[[i, j]] + lr[[i, j]])).norm() * d_row[i] * d_col[j];
                e * e
            })
            .sum()
    });
    Ok(sq.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaConfig {
    pub rank: usize,
    pub amp_bits: u32,
    pub phase_bits: u32,
    /// Iteration cap `T`; the loop runs `max(T - 1, 1)` rounds.
    pub max_iters: usize,
    #[serde(skip)]
    pub width_mode: WidthMode,
}

pub const DEFAULT_RANK: usize = 256;
pub const DEFAULT_BITS: u32 = 4;
pub const DEFAULT_MAX_ITERS: usize = 8;

/// Default rank for a half spectrum with the given shape: 256, or a quarter
/// of the smaller dimension for small matrices.
pub fn default_rank(rows: usize, half_cols: usize) -> usize {
    DEFAULT_RANK.min((rows.min(half_cols) / 4).max(1))
}

impl FaConfig {
    /// Default configuration for a spatial `rows × cols` matrix.
    pub fn for_shape(rows: usize, cols: usize) -> Self {
        let half = (cols + cols % 2) / 2 + 1;
        FaConfig {
            rank: default_rank(rows, half),
            amp_bits: DEFAULT_BITS,
            phase_bits: DEFAULT_BITS,
            max_iters: DEFAULT_MAX_ITERS,
            width_mode: WidthMode::Strict,
        }
    }

    pub fn rounds(&self) -> usize {
        self.max_iters.saturating_sub(1).max(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopReason {
    /// Round `round` (1-based) had a larger error than the round before it.
    ErrorIncreased { round: usize },
    /// The quantized code repeated, or the error reached zero.
    Converged { round: usize },
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct FaDecomposition {
    pub code: PolarCode,
    pub factors: LowRankFactors,
    pub config: FaConfig,
    pub calibrated: bool,
    /// Error after every executed round, including a final increase.
    pub error_trace: Vec<f64>,
    /// Error of the retained iterate, `min(error_trace)`.
    pub final_error: f64,
    /// `‖D_row |E| D_col‖_F` of the retained iterate when calibrated.
    pub surrogate_error: Option<f64>,
    pub stop: StopReason,
    /// Spatial shape before any padding.
    pub original_dims: (usize, usize),
    /// Even transform width.
    pub transform_cols: usize,
}

impl FaDecomposition {
    pub fn rows(&self) -> usize {
        self.original_dims.0
    }

    pub fn half_cols(&self) -> usize {
        self.transform_cols / 2 + 1
    }

    /// `Q̃ + L̃₁L̃₂` in half-spectrum shape.
    pub fn approximation(&self) -> Array2<Complex64> {
        polar_dequantize(&self.code) + self.factors.product()
    }
}

/// Runs the alternating decomposition on the spectrum of a real matrix.
pub fn fa_decompose(
    w: &Array2<f64>,
    calib: Option<&CalibrationMatrix>,
    config: &FaConfig,
) -> Result<FaDecomposition> {
    let spectrum = forward_dft2_with(w, config.width_mode)?;
    fa_decompose_spectrum(&spectrum, calib, config)
}

/// Runs the alternating decomposition on an existing half spectrum.
pub fn fa_decompose_spectrum(
    spectrum: &HalfSpectrum,
    calib: Option<&CalibrationMatrix>,
    config: &FaConfig,
) -> Result<FaDecomposition> {
    check_bits(config.amp_bits, "amplitude")?;
    check_bits(config.phase_bits, "phase")?;
    if config.max_iters == 0 {
        return Err(Error::InvalidParam("iteration cap must be at least 1".into()));
    }
    let w = spectrum.data();
    let (rows, half) = w.dim();
    let max = rows.min(half);
    if config.rank == 0 || config.rank > max {
        return Err(Error::RankOutOfRange {
            rank: config.rank,
            max,
        });
    }

    let calib = match calib {
        Some(c) => {
            check_calibration_shape(c, (rows, half))?;
            if let Some(eps) = c.epsilon() {
                if eps > EPSILON_GUARD {
                    warn!(
                        "calibration diagonal-dominance ratio {eps:.3} exceeds {EPSILON_GUARD}; \
                         row/column averaging may be inaccurate"
                    );
                }
            }
            if c.is_invertible() {
                Some(c)
            } else {
                warn!("calibration has a zero row or column mean; falling back to uncalibrated mode");
                None
            }
        }
        None => None,
    };

    let mut q = Array2::<Complex64>::zeros((rows, half));
    let mut code = PolarCode::zeros(rows, half, config.amp_bits, config.phase_bits);
    let mut factors = LowRankFactors::zero(rows, half);
    let mut trace = Vec::new();
    let mut prev = f64::INFINITY;
    let mut stop = StopReason::MaxIterations;

    for round in 1..=config.rounds() {
        let next_factors = odc_decompose(&(w - &q), calib, config.rank)?;
        let next_code = polar_quantize(&(w - &next_factors.product()), config.amp_bits, config.phase_bits)?;
        let next_q = polar_dequantize(&next_code);
        let err = weighted_error(w, &next_q, &next_factors, calib)?;
        trace.push(err);
        if err > prev {
            stop = StopReason::ErrorIncreased { round };
            break;
        }
        let repeated = round > 1 && next_code == code;
        factors = next_factors;
        code = next_code;
        q = next_q;
        prev = err;
        if repeated || err == 0.0 {
            stop = StopReason::Converged { round };
            break;
        }
    }

    let surrogate = match calib {
        Some(c) => Some(surrogate_error(w, &q, &factors, c)?),
        None => None,
    };
    Ok(FaDecomposition {
        code,
        factors,
        config: *config,
        calibrated: calib.is_some(),
        error_trace: trace,
        final_error: prev,
        surrogate_error: surrogate,
        stop,
        original_dims: (rows, spectrum.original_cols()),
        transform_cols: spectrum.cols(),
    })
}

/// Inverse-transforms a half-spectrum approximation after projecting its
/// DC/Nyquist columns onto the conjugate-symmetry constraint.
pub fn spatial_from_half(
    approx: Array2<Complex64>,
    transform_cols: usize,
    original_cols: usize,
) -> Result<Array2<f64>> {
    let mut s = HalfSpectrum::new(transform_cols, original_cols, approx)?;
    s.project_symmetric();
    inverse_dft2(&s)
}

/// Real spatial matrix represented by a decomposition.
pub fn reconstruct_spatial(dec: &FaDecomposition) -> Result<Array2<f64>> {
    spatial_from_half(dec.approximation(), dec.transform_cols, dec.original_dims.1)
}
