//! Bits-per-parameter arithmetic and achieved container sizes.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensorio::{packed_len, CompressedContainer, FALQ_HEADER_LEN};

/// Shapes of the weight matrices sharing one budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LayerDims(pub Vec<(usize, usize)>);

impl LayerDims {
    pub fn new(dims: Vec<(usize, usize)>) -> Result<Self> {
        let d = LayerDims(dims);
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() {
            return Err(Error::InvalidParam("no layer dimensions given".into()));
        }
        if let Some(&(a, b)) = self.0.iter().find(|&&(a, b)| a == 0 || b == 0) {
            return Err(Error::InvalidParam(format!("zero dimension in {a}x{b}")));
        }
        Ok(())
    }

    /// `Σ d₁·d₂`.
    pub fn total_params(&self) -> f64 {
        self.0.iter().map(|&(a, b)| a as f64 * b as f64).sum()
    }

    /// `Σ (d₁ + d₂)`.
    pub fn total_edges(&self) -> f64 {
        self.0.iter().map(|&(a, b)| (a + b) as f64).sum()
    }

    /// Query, key, value, output, gate, up and down projections of one
    /// transformer block.
    pub fn transformer_block(hidden: usize, kv: usize, intermediate: usize) -> Self {
        LayerDims(vec![
            (hidden, hidden),
            (kv, hidden),
            (kv, hidden),
            (hidden, hidden),
            (intermediate, hidden),
            (intermediate, hidden),
            (hidden, intermediate),
        ])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetConfig {
    /// Bits per backbone entry.
    pub b_q: f64,
    /// Bits per factor entry.
    pub b_l: f64,
    /// Rank.
    pub k: usize,
}

impl BudgetConfig {
    pub fn new(b_q: f64, b_l: f64, k: usize) -> Result<Self> {
        let c = BudgetConfig { b_q, b_l, k };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b_q > 0.0 && self.b_q < self.b_l && self.b_l.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "need 0 < B_Q < B_L, got B_Q={} B_L={}",
                self.b_q, self.b_l
            )));
        }
        Ok(())
    }
}

/// `Σ(B_Q·d₁d₂ + k·B_L·(d₁+d₂)) / Σ d₁d₂`.
pub fn average_bits(dims: &LayerDims, cfg: &BudgetConfig) -> f64 {
    let n = dims.total_params();
    (cfg.b_q * n + cfg.k as f64 * cfg.b_l * dims.total_edges()) / n
}

/// Rank below which the average bit width stays under `b_l`.
pub fn rank_threshold(dims: &LayerDims, b_q: f64, b_l: f64) -> Result<f64> {
    BudgetConfig::new(b_q, b_l, 0)?;
    Ok((1.0 - b_q / b_l) * dims.total_params() / dims.total_edges())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetReport {
    pub sum_params: f64,
    pub sum_edges: f64,
    pub b_q: f64,
    pub b_l: f64,
    pub k: usize,
    pub b_avg: f64,
    pub threshold: f64,
    pub below_baseline: bool,
}

pub fn budget_report(dims: &LayerDims, cfg: &BudgetConfig) -> Result<BudgetReport> {
    dims.validate()?;
    cfg.validate()?;
    let b_avg = average_bits(dims, cfg);
    Ok(BudgetReport {
        sum_params: dims.total_params(),
        sum_edges: dims.total_edges(),
        b_q: cfg.b_q,
        b_l: cfg.b_l,
        k: cfg.k,
        b_avg,
        threshold: rank_threshold(dims, cfg.b_q, cfg.b_l)?,
        below_baseline: b_avg < cfg.b_l,
    })
}

/// Achieved size of a container against the uncompressed matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContainerRatio {
    pub compressed_bits: u64,
    pub original_bits: u64,
    /// `original_bits / compressed_bits`.
    pub ratio: f64,
    /// Real scalars in the stored half spectrum per spatial scalar, `2c/d₂`.
    pub stored_scalar_fraction: f64,
    /// Complex coefficients kept per spatial column, `c/d₂`; the share of
    /// the full spectrum that is not implied by conjugate symmetry.
    pub stored_complex_fraction: f64,
    pub header_included: bool,
}

/// Bits of a container's numeric payload: header, 2×32 bits per complex
/// factor scalar and both packed index streams. Metadata is not counted.
pub fn container_ratio(
    container: &CompressedContainer,
    original_bits_per_scalar: u32,
    include_header: bool,
) -> Result<ContainerRatio> {
    container.validate()?;
    let mut bytes = container.numeric_len();
    if !include_header {
        bytes -= FALQ_HEADER_LEN;
    }
    let compressed_bits = 8 * bytes as u64;
    let original_bits = (container.rows * container.cols) as u64 * original_bits_per_scalar as u64;
    let width = container.cols + container.cols % 2;
    Ok(ContainerRatio {
        compressed_bits,
        original_bits,
        ratio: original_bits as f64 / compressed_bits as f64,
        stored_scalar_fraction: 2.0 * container.half_cols as f64 / width as f64,
        stored_complex_fraction: container.half_cols as f64 / width as f64,
        header_included: include_header,
    })
}

/// Largest real rank at which a `rows × cols` container is still smaller than
/// the original; the ratio exceeds 1 exactly for integer ranks below it.
/// Negative when the index streams alone do not fit.
pub fn break_even_rank(
    rows: usize,
    cols: usize,
    amp_bits: u32,
    phase_bits: u32,
    original_bits_per_scalar: u32,
    include_header: bool,
) -> f64 {
    let half = (cols + cols % 2) / 2 + 1;
    let n = rows * half;
    let header = if include_header { FALQ_HEADER_LEN } else { 0 };
    let fixed_bits = 8 * (header + packed_len(n, amp_bits) + packed_len(n, phase_bits)) as u64;
    let original_bits = (rows * cols) as u64 * original_bits_per_scalar as u64;
    let per_rank = 64.0 * (rows + half) as f64;
    (original_bits as f64 - fixed_bits as f64) / per_rank
}
