//! Synthetic stationary fields and spatial-vs-frequency comparisons.
//!
//! Every function here is a pure function of its inputs and seeds; trials run
//! concurrently and are collected in seed order.

use std::io::Write;

use ndarray::Array2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::csvd::{complex_svd, complexify, min_rank_for_error, truncate_factors, truncation_error};
use crate::error::{Error, Result};
use crate::par;
use crate::polarquant::{polar_dequantize, polar_quantize, qim_quantize, wrap_angle};
use crate::spectral::forward_dft2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationaryFieldSpec {
    pub rows: usize,
    pub cols: usize,
    pub rho: f64,
    pub seed: u64,
}

impl StationaryFieldSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidParam("field dimensions must be positive".into()));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::InvalidParam(format!("rho {} outside (0, 1)", self.rho)));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        StationaryFieldSpec { seed, ..*self }
    }
}

/// Lower Cholesky factor of the `n × n` Toeplitz matrix `[ρ^|i−j|]`.
pub fn toeplitz_cholesky(n: usize, rho: f64) -> Result<Array2<f64>> {
    let a = Array2::from_shape_fn((n, n), |(i, j)| rho.powi(i.abs_diff(j) as i32));
    let mut l = Array2::<f64>::zeros((n, n));
    for j in 0..n {
        let d = a[[j, j]] - (0..j).map(|k| l[[j, k]] * l[[j, k]]).sum::<f64>();
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::Cholesky(j));
        }
        let d = d.sqrt();
        l[[j, j]] = d;
        for i in j + 1..n {
            let s = a[[i, j]] - (0..j).map(|k| l[[i, k]] * l[[j, k]]).sum::<f64>();
            l[[i, j]] = s / d;
        }
    }
    Ok(l)
}

/// Zero-mean Gaussian field with covariance `ρ^{|Δm| + |Δn|}`, drawn as
/// `A·G·Bᵀ` with `A`, `B` the Cholesky factors of the 1-D Toeplitz matrices.
pub fn gen_stationary_field(spec: &StationaryFieldSpec) -> Result<Array2<f64>> {
    spec.validate()?;
    let a = toeplitz_cholesky(spec.rows, spec.rho)?;
    let b = toeplitz_cholesky(spec.cols, spec.rho)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let g = Array2::from_shape_simple_fn((spec.rows, spec.cols), || StandardNormal.sample(&mut rng));
    Ok(a.dot(&g).dot(&b.t()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainReport {
    pub rank: usize,
    /// Relative rank-`rank` truncation error of the matrix itself.
    pub spatial_err: f64,
    /// Relative truncation error of the half spectrum, at `rank / 2` (at
    /// least 1) under fair parameter counting.
    pub freq_err: f64,
    pub spatial_min_rank: usize,
    /// Doubled under fair parameter counting.
    pub freq_min_rank: usize,
    pub fair_params: bool,
}

fn singular_values(m: &Array2<Complex64>) -> Result<Vec<f64>> {
    Ok(complex_svd(m)?.s)
}

fn relative_tail(s: &[f64], r: usize) -> f64 {
    let total = truncation_error(s, 0);
    if total == 0.0 {
        0.0
    } else {
        truncation_error(s, r) / total
    }
}

/// Truncation error and minimum rank of `w` against those of its half
/// spectrum.
///
/// With `fair_params` one complex rank is charged as two real ranks: the
/// frequency error is taken at half the rank and its minimum rank doubled.
pub fn compare_domains(w: &Array2<f64>, r: usize, target_rel: f64, fair_params: bool) -> Result<DomainReport> {
    let max = w.nrows().min(w.ncols());
    if r == 0 || r > max {
        return Err(Error::RankOutOfRange { rank: r, max });
    }
    if !(target_rel >= 0.0) {
        return Err(Error::InvalidParam(format!("target {target_rel} must be non-negative")));
    }
    let spectrum = forward_dft2(w)?;
    let s_spatial = singular_values(&complexify(w))?;
    let s_freq = singular_values(spectrum.data())?;
    let (freq_rank, scale) = if fair_params { ((r / 2).max(1), 2) } else { (r, 1) };
    Ok(DomainReport {
        rank: r,
        spatial_err: relative_tail(&s_spatial, r),
        freq_err: relative_tail(&s_freq, freq_rank),
        spatial_min_rank: min_rank_for_error(&s_spatial, target_rel),
        freq_min_rank: scale * min_rank_for_error(&s_freq, target_rel),
        fair_params,
    })
}

/// `ρ² / (1 − ρ²)²`.
pub fn tail_bound(rho: f64) -> f64 {
    let q = 1.0 - rho * rho;
    rho * rho / (q * q)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailRatioReport {
    pub rho: f64,
    pub rank: usize,
    pub n_seeds: usize,
    pub mean_ratio: f64,
    pub std_error: f64,
    pub bound: f64,
    /// `mean_ratio <= bound + 2·std_error`.
    pub pass: bool,
    pub ratios: Vec<f64>,
}

/// Ratio of the tail energy beyond rank `r` of the orthonormally scaled half
/// spectrum to that of the matrix.
pub fn tail_energy_ratio(w: &Array2<f64>, r: usize) -> Result<f64> {
    let spectrum = forward_dft2(w)?;
    let scale = 1.0 / (w.nrows() as f64 * w.ncols() as f64);
    let s_freq = singular_values(spectrum.data())?;
    let s_spatial = singular_values(&complexify(w))?;
    let num = truncation_error(&s_freq, r).powi(2) * scale;
    let den = truncation_error(&s_spatial, r).powi(2);
    if den == 0.0 {
        return Err(Error::InvalidParam(format!("matrix has rank at most {r}; tail is empty")));
    }
    Ok(num / den)
}

/// Monte Carlo estimate of the tail-energy ratio over seeds
/// `spec.seed .. spec.seed + n_seeds`, against `ρ²/(1−ρ²)²`.
pub fn tail_ratio_check(spec: &StationaryFieldSpec, r: usize, n_seeds: usize) -> Result<TailRatioReport> {
    spec.validate()?;
    if n_seeds < 2 {
        return Err(Error::InvalidParam("need at least two seeds".into()));
    }
    let ratios = par::map_range(n_seeds, |i| {
        let w = gen_stationary_field(&spec.with_seed(spec.seed + i as u64))?;
        tail_energy_ratio(&w, r)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let n = n_seeds as f64;
    let mean = ratios.iter().sum::<f64>() / n;
    let var = ratios.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std_error = (var / n).sqrt();
    let bound = tail_bound(spec.rho);
    Ok(TailRatioReport {
        rho: spec.rho,
        rank: r,
        n_seeds,
        mean_ratio: mean,
        std_error,
        bound,
        pass: mean <= bound + 2.0 * std_error,
        ratios,
    })
}

/// One row of the per-seed domain comparison CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainRow {
    pub seed: u64,
    pub rows: usize,
    pub cols: usize,
    pub rho: f64,
    pub rank: usize,
    pub target_rel: f64,
    pub fair_params: bool,
    pub spatial_err: f64,
    pub freq_err: f64,
    pub spatial_min_rank: usize,
    pub freq_min_rank: usize,
}

/// `compare_domains` on fields with seeds `spec.seed .. spec.seed + n_seeds`.
pub fn domain_trials(
    spec: &StationaryFieldSpec,
    r: usize,
    target_rel: f64,
    n_seeds: usize,
    fair_params: bool,
) -> Result<Vec<DomainRow>> {
    spec.validate()?;
    par::map_range(n_seeds, |i| {
        let s = spec.with_seed(spec.seed + i as u64);
        let d = compare_domains(&gen_stationary_field(&s)?, r, target_rel, fair_params)?;
        Ok(DomainRow {
            seed: s.seed,
            rows: s.rows,
            cols: s.cols,
            rho: s.rho,
            rank: r,
            target_rel,
            fair_params,
            spatial_err: d.spatial_err,
            freq_err: d.freq_err,
            spatial_min_rank: d.spatial_min_rank,
            freq_min_rank: d.freq_min_rank,
        })
    })
    .into_iter()
    .collect()
}

/// One row of the quantizer ablation CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub scheme: String,
    /// Amplitude bits for the polar scheme, real-part bits for QIM.
    pub bits_a: u32,
    /// Phase bits for the polar scheme, imaginary-part bits for QIM.
    pub bits_b: u32,
    pub mean_abs_phase_err: f64,
    pub reconstruction_rel_err: f64,
}

fn angle(z: Complex64) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        0.0
    } else {
        z.arg()
    }
}

fn ablation_row(scheme: &str, bits: u32, orig: &Array2<Complex64>, recon: &Array2<Complex64>) -> AblationRow {
    let n = orig.len().max(1) as f64;
    let phase = orig
        .iter()
        .zip(recon)
        .map(|(&a, &b)| wrap_angle(angle(a) - angle(b)).abs())
        .sum::<f64>()
        / n;
    let norm = orig.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let diff = orig.iter().zip(recon).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    AblationRow {
        scheme: scheme.into(),
        bits_a: bits,
        bits_b: bits,
        mean_abs_phase_err: phase,
        reconstruction_rel_err: if norm > 0.0 { diff / norm } else { diff },
    }
}

/// Polar and real/imaginary quantization of a complex residual at `bits`
/// bits per component.
pub fn ablate_residual(residual: &Array2<Complex64>, bits: u32) -> Result<Vec<AblationRow>> {
    let polar = polar_dequantize(&polar_quantize(residual, bits, bits)?);
    let qim = qim_quantize(residual, bits, bits)?;
    Ok(vec![
        ablation_row("polar", bits, residual, &polar),
        ablation_row("qim", bits, residual, &qim),
    ])
}

/// Quantizer comparison on the residual of the rank-`r` truncation of the
/// half spectrum of `w`.
pub fn quantizer_ablation(w: &Array2<f64>, r: usize, bits: u32) -> Result<Vec<AblationRow>> {
    let spectrum = forward_dft2(w)?;
    let data = spectrum.data();
    let residual = if r == 0 {
        data.clone()
    } else {
        data - &truncate_factors(&complex_svd(data)?, r)?.product()
    };
    ablate_residual(&residual, bits)
}

/// Writes serializable rows as CSV with a header line.
pub fn write_csv<W: Write, T: Serialize>(out: W, rows: &[T]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(out);
    for row in rows {
        wr.serialize(row).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => Error::Io(e),
        other => Error::Malformed(format!("{other:?}")),
    }
}

/// Parameters of the default benchmark run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSpec {
    pub rows: usize,
    pub cols: usize,
    pub rho: f64,
    pub rank: usize,
    pub target_rel: f64,
    pub n_seeds: usize,
    pub seed: u64,
    pub fair_params: bool,
}

impl Default for BenchSpec {
    fn default() -> Self {
        BenchSpec {
            rows: 64,
            cols: 64,
            rho: 0.9,
            rank: 8,
            target_rel: 0.01,
            n_seeds: 20,
            seed: 0,
            fair_params: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchSummary {
    pub spec: BenchSpec,
    pub mean_spatial_err: f64,
    pub mean_freq_err: f64,
    pub properties: Vec<PropertyResult>,
}

/// Per-seed domain rows and a summary of the two compaction properties.
pub fn run_bench(spec: &BenchSpec) -> Result<(Vec<DomainRow>, BenchSummary)> {
    if spec.n_seeds < 2 {
        return Err(Error::InvalidParam("need at least two seeds".into()));
    }
    let field = StationaryFieldSpec {
        rows: spec.rows,
        cols: spec.cols,
        rho: spec.rho,
        seed: spec.seed,
    };
    let rows = domain_trials(&field, spec.rank, spec.target_rel, spec.n_seeds, spec.fair_params)?;
    let n = rows.len() as f64;
    let wins = rows.iter().filter(|r| r.freq_min_rank <= r.spatial_min_rank).count() as f64 / n;
    let tail = tail_ratio_check(&field, spec.rank, spec.n_seeds)?;
    let summary = BenchSummary {
        spec: *spec,
        mean_spatial_err: rows.iter().map(|r| r.spatial_err).sum::<f64>() / n,
        mean_freq_err: rows.iter().map(|r| r.freq_err).sum::<f64>() / n,
        properties: vec![
            PropertyResult {
                name: "freq_min_rank_le_spatial_fraction".into(),
                value: wins,
                threshold: 0.9,
                pass: wins >= 0.9,
            },
            PropertyResult {
                name: "tail_ratio_mean_within_bound".into(),
                value: tail.mean_ratio,
                threshold: tail.bound + 2.0 * tail.std_error,
                pass: tail.pass,
            },
        ],
    };
    Ok((rows, summary))
}
