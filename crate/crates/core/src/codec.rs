//! End-to-end compression of a real matrix into a container and back.

use ndarray::Array2;
use num_complex::{Complex32, Complex64};
use serde::Serialize;

use crate::budget::{average_bits, container_ratio, BudgetConfig, ContainerRatio, LayerDims};
use crate::csvd::LowRankFactors;
use crate::decompose::{
    fa_decompose_spectrum, spatial_from_half, weighted_error, CalibrationMatrix, FaConfig,
    StopReason,
};
use crate::error::{Error, Result};
use crate::polarquant::{polar_dequantize, PolarCode};
use crate::spectral::forward_dft2_with;
use crate::tensorio::CompressedContainer;

/// Bits per factor entry assumed by the idealized budget in reports.
pub const FACTOR_BITS: f64 = 32.0;

#[derive(Debug, Clone, Serialize)]
pub struct CompressReport {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub amp_bits: u32,
    pub phase_bits: u32,
    pub max_iters: usize,
    pub calibrated: bool,
    pub stop: StopReason,
    pub error_trace: Vec<f64>,
    /// Error of the stored container, with factors rounded to float32.
    pub final_error: f64,
    /// Error of the retained iterate before rounding the factors.
    pub final_error_f64: f64,
    pub surrogate_error: Option<f64>,
    /// `‖W − Ŵ‖_F / ‖W‖_F` after decoding the container.
    pub spatial_rel_error: f64,
    pub container_ratio: ContainerRatio,
    /// Idealized average bits with `B_Q = b_r + b_θ` and 32-bit factors;
    /// absent when `B_Q ≥ 32`.
    pub b_avg: Option<f64>,
}

fn round_factor(m: &Array2<Complex64>) -> Vec<Complex32> {
    m.iter().map(|z| Complex32::new(z.re as f32, z.im as f32)).collect()
}

/// Polar code stored in a container.
pub fn container_code(c: &CompressedContainer) -> PolarCode {
    PolarCode {
        rows: c.rows,
        cols: c.half_cols,
        amp_bits: c.amp_bits as u32,
        phase_bits: c.phase_bits as u32,
        r_max: c.r_max,
        amp: c.amp_indices.clone(),
        phase: c.phase_indices.clone(),
    }
}

/// Factors stored in a container, widened to float64. Singular values are
/// not stored and come back empty.
pub fn container_factors(c: &CompressedContainer) -> Result<LowRankFactors> {
    let widen = |v: &[Complex32], shape: (usize, usize)| {
        Array2::from_shape_vec(shape, v.iter().map(|z| Complex64::new(z.re as f64, z.im as f64)).collect())
            .map_err(|e| Error::Malformed(e.to_string()))
    };
    Ok(LowRankFactors {
        l1: widen(&c.l1, (c.rows, c.rank))?,
        l2: widen(&c.l2, (c.rank, c.half_cols))?,
        kept_singular_values: Vec::new(),
    })
}

/// Compresses `w`. The container carries the report (minus the ratio) as
/// its metadata block.
pub fn compress(
    w: &Array2<f64>,
    calib: Option<&CalibrationMatrix>,
    config: &FaConfig,
) -> Result<(CompressedContainer, CompressReport)> {
    let spectrum = forward_dft2_with(w, config.width_mode)?;
    let dec = fa_decompose_spectrum(&spectrum, calib, config)?;
    let used_calib = if dec.calibrated { calib } else { None };
    let (rows, cols) = w.dim();

    let mut container = CompressedContainer {
        rows,
        cols,
        half_cols: spectrum.half_cols(),
        rank: config.rank,
        amp_bits: config.amp_bits as u8,
        phase_bits: config.phase_bits as u8,
        r_max: dec.code.r_max,
        l1: round_factor(&dec.factors.l1),
        l2: round_factor(&dec.factors.l2),
        amp_indices: dec.code.amp.clone(),
        phase_indices: dec.code.phase.clone(),
        metadata: None,
    };
    let stored = container_factors(&container)?;
    let q = polar_dequantize(&dec.code);
    let final_error = weighted_error(spectrum.data(), &q, &stored, used_calib)?;
    let back = spatial_from_half(q + stored.product(), spectrum.cols(), cols)?;
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff = (&back - w).iter().map(|x| x * x).sum::<f64>().sqrt();
    let spatial_rel_error = if norm > 0.0 { diff / norm } else { diff };

    let b_avg = BudgetConfig::new((config.amp_bits + config.phase_bits) as f64, FACTOR_BITS, config.rank)
        .ok()
        .map(|b| average_bits(&LayerDims(vec![(rows, cols)]), &b));
    let report = CompressReport {
        rows,
        cols,
        rank: config.rank,
        amp_bits: config.amp_bits,
        phase_bits: config.phase_bits,
        max_iters: config.max_iters,
        calibrated: dec.calibrated,
        stop: dec.stop,
        error_trace: dec.error_trace.clone(),
        final_error,
        final_error_f64: dec.final_error,
        surrogate_error: dec.surrogate_error,
        spatial_rel_error,
        container_ratio: container_ratio(&container, 32, true)?,
        b_avg,
    };
    container.metadata = Some(
        serde_json::json!({
            "error_trace": report.error_trace,
            "final_error": report.final_error,
            "stop": report.stop,
            "calibrated": report.calibrated,
            "max_iters": report.max_iters,
        })
        .to_string(),
    );
    Ok((container, report))
}

/// Spatial matrix encoded by a container.
pub fn decompress(c: &CompressedContainer) -> Result<Array2<f64>> {
    c.validate()?;
    let code = container_code(c);
    code.validate()?;
    let factors = container_factors(c)?;
    let approx = polar_dequantize(&code) + factors.product();
    spatial_from_half(approx, c.cols + c.cols % 2, c.cols)
}
