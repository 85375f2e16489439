use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use falq::bench::{gen_stationary_field, quantizer_ablation, run_bench, write_csv, BenchSpec, StationaryFieldSpec};
use falq::budget::{break_even_rank, budget_report, container_ratio, BudgetConfig, LayerDims};
use falq::codec;
use falq::csvd::{complex_svd, complexify, truncation_error};
use falq::decompose::{build_calibration, CalibrationMatrix, FaConfig};
use falq::spectral::{forward_dft2, WidthMode};
use falq::tensorio::{read_tensor, write_tensor, CompressedContainer, Tensor};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{AnalyzeArgs, BenchArgs, BudgetArgs, CompressArgs, ParamError, ReconstructArgs};

fn param(msg: impl Into<String>) -> anyhow::Error {
    ParamError(msg.into()).into()
}

fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let t = read_tensor(path).with_context(|| format!("reading {}", path.display()))?;
    if t.dims.len() != 2 {
        return Err(param(format!("{}: expected a 2-D tensor, found {} dims", path.display(), t.dims.len())));
    }
    t.to_real_matrix().with_context(|| format!("reading {}", path.display()))
}

/// Opens `path` for writing, or standard output when absent.
fn sink(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn output_paths(args: &CompressArgs) -> Result<Vec<PathBuf>> {
    let default = |p: &PathBuf| p.with_extension("falq");
    match (&args.output, args.inputs.len()) {
        (None, _) => Ok(args.inputs.iter().map(default).collect()),
        (Some(out), 1) => Ok(vec![out.clone()]),
        (Some(dir), _) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            args.inputs
                .iter()
                .map(|p| {
                    let name = p.file_name().ok_or_else(|| param(format!("{} has no file name", p.display())))?;
                    Ok(dir.join(Path::new(name).with_extension("falq")))
                })
                .collect()
        }
    }
}

fn compress_one(
    args: &CompressArgs,
    calib: Option<&CalibrationMatrix>,
    input: &Path,
    output: &Path,
) -> Result<Value> {
    let w = read_matrix(input)?;
    let (rows, cols) = w.dim();
    if cols % 2 == 1 && !args.permissive_odd {
        return Err(falq::Error::OddWidth(cols)).with_context(|| format!("{}", input.display()));
    }
    let mut config = FaConfig::for_shape(rows, cols);
    config.amp_bits = args.bits_amp;
    config.phase_bits = args.bits_phase;
    config.max_iters = args.iters;
    config.width_mode = if args.permissive_odd { WidthMode::ZeroPad } else { WidthMode::Strict };
    if let Some(r) = args.rank {
        config.rank = r;
    }
    let (container, report) =
        codec::compress(&w, calib, &config).with_context(|| format!("compressing {}", input.display()))?;
    container.write(output).with_context(|| format!("writing {}", output.display()))?;
    log::info!(
        "{} -> {}: final error {:.6e}, ratio {:.3}",
        input.display(),
        output.display(),
        report.final_error,
        report.container_ratio.ratio
    );
    let mut v = serde_json::to_value(&report)?;
    v["input"] = json!(input.display().to_string());
    v["output"] = json!(output.display().to_string());
    Ok(v)
}

#[cfg(feature = "parallel")]
fn run_jobs<T: Send, F: Fn(usize) -> T + Sync + Send>(n: usize, jobs: usize, f: F) -> Result<Vec<T>> {
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

#[cfg(not(feature = "parallel"))]
fn run_jobs<T, F: Fn(usize) -> T>(n: usize, _jobs: usize, f: F) -> Result<Vec<T>> {
    Ok((0..n).map(f).collect())
}

pub fn compress(args: &CompressArgs) -> Result<Vec<Value>> {
    if args.jobs == 0 {
        return Err(param("--jobs must be at least 1"));
    }
    for p in &args.inputs {
        if !p.is_file() {
            return Err(io::Error::new(io::ErrorKind::NotFound, format!("input {} not found", p.display())).into());
        }
    }
    let outputs = output_paths(args)?;
    let calib = match &args.calib {
        Some(p) => Some(build_calibration(&read_matrix(p)?).with_context(|| format!("calibration {}", p.display()))?),
        None => None,
    };
    run_jobs(args.inputs.len(), args.jobs, |i| {
        compress_one(args, calib.as_ref(), &args.inputs[i], &outputs[i])
    })?
    .into_iter()
    .collect()
}

pub fn reconstruct(args: &ReconstructArgs) -> Result<Vec<Value>> {
    let c = CompressedContainer::read(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let w = codec::decompress(&c)?;
    let tensor = if args.f32 {
        Tensor::from_matrix_f32(&w.mapv(|x| x as f32))
    } else {
        Tensor::from_matrix(&w)
    };
    write_tensor(&args.output, &tensor).with_context(|| format!("writing {}", args.output.display()))?;
    Ok(vec![json!({
        "input": args.input.display().to_string(),
        "output": args.output.display().to_string(),
        "rows": c.rows,
        "cols": c.cols,
        "rank": c.rank,
    })])
}

#[derive(Serialize)]
struct SpectrumRow {
    domain: &'static str,
    index: usize,
    sigma: f64,
    /// Relative error of the truncation that keeps `index + 1` values.
    relative_tail: f64,
}

fn spectrum_rows(domain: &'static str, s: &[f64]) -> Vec<SpectrumRow> {
    let total = truncation_error(s, 0);
    s.iter()
        .enumerate()
        .map(|(index, &sigma)| SpectrumRow {
            domain,
            index,
            sigma,
            relative_tail: if total > 0.0 { truncation_error(s, index + 1) / total } else { 0.0 },
        })
        .collect()
}

pub fn analyze(args: &AnalyzeArgs) -> Result<Vec<Value>> {
    let w = read_matrix(&args.input)?;
    let spatial = complex_svd(&complexify(&w))?.s;
    let freq = complex_svd(forward_dft2(&w)?.data())?.s;
    let mut rows = spectrum_rows("spatial", &spatial);
    rows.extend(spectrum_rows("frequency", &freq));
    write_csv(sink(args.output.as_ref())?, &rows)?;
    let rank = args.rank.unwrap_or_else(|| 8.min(w.nrows()).min(w.ncols()));
    let report = falq::bench::compare_domains(&w, rank, args.target, args.fair_params)?;
    let mut v = serde_json::to_value(report)?;
    v["input"] = json!(args.input.display().to_string());
    v["target_rel"] = json!(args.target);
    Ok(vec![v])
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DimsFile {
    List(Vec<(usize, usize)>),
    Object { dims: Vec<(usize, usize)> },
}

pub fn budget(args: &BudgetArgs) -> Result<Vec<Value>> {
    let text = fs::read_to_string(&args.dims).with_context(|| format!("reading {}", args.dims.display()))?;
    let dims = match serde_json::from_str(&text).with_context(|| format!("parsing {}", args.dims.display()))? {
        DimsFile::List(d) | DimsFile::Object { dims: d } => LayerDims::new(d)?,
    };
    let cfg = BudgetConfig::new(args.bq, args.bl, args.rank)?;
    let mut v = serde_json::to_value(budget_report(&dims, &cfg)?)?;
    if let Some(path) = &args.container {
        let c = CompressedContainer::read(path).with_context(|| format!("reading {}", path.display()))?;
        let ratio = container_ratio(&c, 32, !args.exclude_header)?;
        v["container"] = serde_json::to_value(ratio)?;
        v["container"]["break_even_rank"] = json!(break_even_rank(
            c.rows,
            c.cols,
            c.amp_bits as u32,
            c.phase_bits as u32,
            32,
            !args.exclude_header
        ));
    }
    println!("{}", serde_json::to_string_pretty(&v)?);
    Ok(vec![v])
}

pub fn bench(args: &BenchArgs) -> Result<Vec<Value>> {
    let mut spec = match &args.spec {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<BenchSpec>(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => BenchSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.fair_params |= args.fair_params;
    let (rows, summary) = run_bench(&spec)?;
    write_csv(sink(args.output.as_ref())?, &rows)?;
    if let Some(path) = &args.ablation {
        let w = gen_stationary_field(&StationaryFieldSpec {
            rows: spec.rows,
            cols: spec.cols,
            rho: spec.rho,
            seed: spec.seed,
        })?;
        let ablation = quantizer_ablation(&w, spec.rank, falq::decompose::DEFAULT_BITS)?;
        write_csv(sink(Some(path))?, &ablation)?;
    }
    Ok(vec![serde_json::to_value(summary)?])
}
