//! Polar-coordinate quantization of complex matrices, plus the independent
//! real/imaginary (QIM) baseline.
//!
//! Amplitudes are quantized on `[0, r_max]` with `2^b_r` uniform levels
//! (`Δ_r = r_max / (2^b_r - 1)`), phases on `[-π, π)` with `2^b_θ` levels
//! (`Δ_θ = 2π / 2^b_θ`). Phase indices wrap modulo `2^b_θ`, so a phase just
//! below `π` maps to index 0 (`θ̂ = -π`).

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone, PartialEq)]
pub struct PolarCode {
    pub rows: usize,
    pub cols: usize,
    pub amp_bits: u32,
    pub phase_bits: u32,
    pub r_max: f64,
    /// Row-major amplitude indices in `0..2^amp_bits`.
    pub amp: Vec<u32>,
    /// Row-major phase indices in `0..2^phase_bits`.
    pub phase: Vec<u32>,
}

pub(crate) fn check_bits(bits: u32, what: &str) -> Result<()> {
    if !(1..=16).contains(&bits) {
        return Err(Error::InvalidParam(format!(
            "{what} bit width {bits} outside 1..=16"
        )));
    }
    Ok(())
}

/// Phase step for a `bits`-bit lattice.
pub fn phase_step(bits: u32) -> f64 {
    2.0 * PI / (1u64 << bits) as f64
}

/// Amplitude step for a `bits`-bit lattice on `[0, r_max]`.
pub fn amp_step(r_max: f64, bits: u32) -> f64 {
    r_max / ((1u64 << bits) - 1) as f64
}

/// Wraps an angle difference into `[-π, π)`.
pub fn wrap_angle(x: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let y = x - two_pi * (x / two_pi).round();
    if y >= PI {
        y - two_pi
    } else {
        y
    }
}

fn polar(z: Complex64) -> (f64, f64) {
    let r = z.norm();
    // zero entries (including signed zeros) get phase 0
    let theta = if r == 0.0 { 0.0 } else { z.im.atan2(z.re) };
    (r, theta)
}

impl PolarCode {
    pub fn amp_step(&self) -> f64 {
        amp_step(self.r_max, self.amp_bits)
    }

    pub fn phase_step(&self) -> f64 {
        phase_step(self.phase_bits)
    }

    pub fn len(&self) -> usize {
        self.amp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amp.is_empty()
    }

    /// Reconstructed amplitude of entry `k` (row-major).
    pub fn amplitude(&self, k: usize) -> f64 {
        self.amp[k] as f64 * self.amp_step()
    }

    /// Reconstructed phase of entry `k`, in `[-π, π)`.
    pub fn phase(&self, k: usize) -> f64 {
        self.phase[k] as f64 * self.phase_step() - PI
    }

    /// An all-zero code (zero amplitude everywhere).
    pub fn zeros(rows: usize, cols: usize, amp_bits: u32, phase_bits: u32) -> Self {
        PolarCode {
            rows,
            cols,
            amp_bits,
            phase_bits,
            r_max: 0.0,
            amp: vec![0; rows * cols],
            phase: vec![1 << (phase_bits - 1); rows * cols],
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_bits(self.amp_bits, "amplitude")?;
        check_bits(self.phase_bits, "phase")?;
        let n = self.rows * self.cols;
        if self.amp.len() != n || self.phase.len() != n {
            return Err(Error::Malformed("index count does not match shape".into()));
        }
        if !self.r_max.is_finite() || self.r_max < 0.0 {
            return Err(Error::Malformed(format!("invalid r_max {}", self.r_max)));
        }
        let (amax, pmax) = ((1u32 << self.amp_bits) - 1, (1u32 << self.phase_bits) - 1);
        if self.amp.iter().any(|&q| q > amax) || self.phase.iter().any(|&q| q > pmax) {
            return Err(Error::Malformed("index exceeds codebook".into()));
        }
        Ok(())
    }
}

/// Quantizes every entry of `r` in polar form.
pub fn polar_quantize(r: &Array2<Complex64>, amp_bits: u32, phase_bits: u32) -> Result<PolarCode> {
    check_bits(amp_bits, "amplitude")?;
    check_bits(phase_bits, "phase")?;
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (rows, cols) = r.dim();
    let values: Vec<Complex64> = r.iter().copied().collect();
    let polar: Vec<(f64, f64)> = par::map_slice(&values, |&z| polar(z));
    let r_max = polar.iter().map(|p| p.0).fold(0.0, f64::max);

    let amp_top = (1u32 << amp_bits) - 1;
    let phase_levels = 1u64 << phase_bits;
    let d_r = amp_step(r_max, amp_bits);
    let d_theta = phase_step(phase_bits);

    let codes: Vec<(u32, u32)> = par::map_slice(&polar, |&(amp, theta)| {
        let qa = if r_max == 0.0 {
            0
        } else {
            ((amp / d_r).round() as u32).min(amp_top)
        };
        let qp = (((theta + PI) / d_theta).round() as u64 % phase_levels) as u32;
        (qa, qp)
    });
    let (amp, phase) = codes.into_iter().unzip();
    Ok(PolarCode {
        rows,
        cols,
        amp_bits,
        phase_bits,
        r_max,
        amp,
        phase,
    })
}

/// `Q̃[i,j] = r̂ e^{iθ̂}` for every entry of the code.
pub fn polar_dequantize(code: &PolarCode) -> Array2<Complex64> {
    let values = par::map_range(code.len(), |k| {
        Complex64::from_polar(code.amplitude(k), code.phase(k))
    });
    Array2::from_shape_vec((code.rows, code.cols), values).expect("code length matches shape")
}

fn qim_axis(x: f64, m: f64, levels: f64) -> f64 {
    if m == 0.0 {
        return 0.0;
    }
    let steps = levels - 1.0;
    let q = ((x + m) / (2.0 * m) * steps).round().clamp(0.0, steps);
    // written so the grid endpoints ±m come back exactly
    m * (2.0 * q / steps - 1.0)
}

/// Baseline: quantizes real and imaginary parts independently on symmetric
/// uniform grids over `[-m, m]`, `m` being the largest magnitude of that part.
/// Returns the reconstruction.
pub fn qim_quantize(r: &Array2<Complex64>, re_bits: u32, im_bits: u32) -> Result<Array2<Complex64>> {
    check_bits(re_bits, "real")?;
    check_bits(im_bits, "imaginary")?;
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let m_re = r.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
    let m_im = r.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
    let (l_re, l_im) = ((1u64 << re_bits) as f64, (1u64 << im_bits) as f64);
    Ok(r.mapv(|z| Complex64::new(qim_axis(z.re, m_re, l_re), qim_axis(z.im, m_im, l_im))))
}

/// Grid step of the QIM baseline for one part.
pub fn qim_step(m: f64, bits: u32) -> f64 {
    2.0 * m / ((1u64 << bits) - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseErrorStats {
    /// Mean `|wrap(θ - θ̂)|` over all entries.
    pub mean_abs_phase_err: f64,
    /// Mean `|w - ŵ|²` with both amplitude and phase quantized.
    pub mean_sq_complex_err: f64,
    /// Mean `|r e^{iθ} - r e^{iθ̂}|²`, amplitude kept exact.
    pub phase_only_mean_sq_err: f64,
    /// Mean `r²`.
    pub mean_sq_amplitude: f64,
    /// `π² / (3 · 2^{2 b_θ})`.
    pub bound_coefficient: f64,
    /// `mean_sq_amplitude * bound_coefficient`.
    pub bound: f64,
    /// Whether `phase_only_mean_sq_err <= bound * 1.05`.
    pub within_bound: bool,
}

/// Empirical phase and complex error of `code` against the matrix it encodes,
/// together with the analytic phase-only bound.
pub fn phase_error_stats(r: &Array2<Complex64>, code: &PolarCode) -> Result<PhaseErrorStats> {
    if r.dim() != (code.rows, code.cols) {
        return Err(Error::ShapeMismatch {
            expected: (code.rows, code.cols),
            found: r.dim(),
        });
    }
    let values: Vec<Complex64> = r.iter().copied().collect();
    let per_entry: Vec<[f64; 4]> = par::map_range(values.len(), |k| {
        let w = values[k];
        let (amp, theta) = polar(w);
        let theta_hat = code.phase(k);
        let dtheta = wrap_angle(theta - theta_hat);
        let w_hat = Complex64::from_polar(code.amplitude(k), theta_hat);
        let w_phase = Complex64::from_polar(amp, theta_hat);
        [
            dtheta.abs(),
            (w - w_hat).norm_sqr(),
            (w - w_phase).norm_sqr(),
            amp * amp,
        ]
    });
    let n = per_entry.len().max(1) as f64;
    let mut sums = [0.0f64; 4];
    for e in &per_entry {
        for (s, x) in sums.iter_mut().zip(e) {
            *s += x;
        }
    }
    let [abs_phase, sq_complex, sq_phase_only, sq_amp] = sums.map(|s| s / n);
    let coeff = PI * PI / (3.0 * 4f64.powi(code.phase_bits as i32));
    let bound = sq_amp * coeff;
    Ok(PhaseErrorStats {
        mean_abs_phase_err: abs_phase,
        mean_sq_complex_err: sq_complex,
        phase_only_mean_sq_err: sq_phase_only,
        mean_sq_amplitude: sq_amp,
        bound_coefficient: coeff,
        bound,
        within_bound: sq_phase_only <= bound * 1.05,
    })
}
