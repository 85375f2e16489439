mod common;

use common::*;
use falq::bench::*;
use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use std::f64::consts::PI;

fn field(rows: usize, cols: usize, rho: f64, seed: u64) -> Array2<f64> {
    gen_stationary_field(&StationaryFieldSpec { rows, cols, rho, seed }).unwrap()
}

/// Mean and standard error of the products `W[a]·W[b]` over seeds.
fn covariance(rho: f64, a: (usize, usize), b: (usize, usize), seeds: u64) -> (f64, f64) {
    let xs: Vec<f64> = (0..seeds).map(|s| {
        let w = field(16, 16, rho, 1000 + s);
        w[a] * w[b]
    }).collect();
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn empirical_covariance_matches_model() {
    let rho = 0.6;
    let fields: Vec<Array2<f64>> = (0..500).map(|s| field(16, 16, rho, 5000 + s)).collect();
    let mut r = rng(5);
    for _ in 0..20 {
        let a = (r.random_range(0..16), r.random_range(0..16));
        let b = (r.random_range(0..16), r.random_range(0..16));
        let xs: Vec<f64> = fields.iter().map(|w| w[a] * w[b]).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let se = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
        let model = rho.powi((a.0.abs_diff(b.0) + a.1.abs_diff(b.1)) as i32);
        assert!((mean - model).abs() <= 3.0 * se, "{a:?} {b:?}: {mean} vs {model} (se {se})");
    }
}

#[test]
fn near_independent_limit() {
    let (mean, se) = covariance(1e-6, (4, 4), (5, 4), 500);
    assert!(mean.abs() <= 3.0 * se, "lag-1 correlation {mean} ± {se}");
}

#[test]
fn lag_one_correlation_at_high_rho() {
    let xs: Vec<(f64, f64)> = (0..200)
        .flat_map(|s| {
            let w = field(64, 64, 0.9, 7000 + s);
            [(w[[10, 20]], w[[11, 20]]), (w[[40, 5]], w[[41, 5]])]
        })
        .collect();
    let n = xs.len() as f64;
    let prods: Vec<f64> = xs.iter().map(|(a, b)| a * b).collect();
    let mean = prods.iter().sum::<f64>() / n;
    let se = (prods.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt();
    assert!((mean - 0.9).abs() <= 3.0 * se, "{mean} ± {se}");
}

#[test]
fn rank_one_spectrum_has_unit_frequency_rank() {
    // a symmetric rank-1 half spectrum: separable real-even profiles
    let a: Vec<f64> = (0..8).map(|m: usize| (-(m.min(8 - m) as f64)).exp()).collect();
    let b: Vec<f64> = (0..12).map(|n: usize| 1.0 / (1.0 + n.min(12 - n) as f64)).collect();
    let spectrum = Array2::from_shape_fn((8, 7), |(u, v)| Complex64::new(a[u] * b[v], 0.0));
    let h = falq::spectral::HalfSpectrum::new(12, 12, spectrum).unwrap();
    let w = falq::spectral::inverse_dft2(&h).unwrap();
    let d = compare_domains(&w, 1, 1e-6, false).unwrap();
    assert_eq!(d.freq_min_rank, 1);
    assert!(d.freq_err < 1e-12);
}

#[test]
fn frequency_error_smaller_on_smooth_fields() {
    for r in [4, 8, 16] {
        let reports: Vec<DomainReport> =
            (0..20).map(|s| compare_domains(&field(128, 128, 0.95, 100 + s), r, 0.01, false).unwrap()).collect();
        let spatial = reports.iter().map(|d| d.spatial_err).sum::<f64>() / 20.0;
        let freq = reports.iter().map(|d| d.freq_err).sum::<f64>() / 20.0;
        assert!(freq < spatial, "rank {r}: freq {freq} vs spatial {spatial}");
    }
}

#[test]
fn direction_holds_at_rho_0_7() {
    let rows = domain_trials(&StationaryFieldSpec { rows: 64, cols: 64, rho: 0.7, seed: 300 }, 8, 0.01, 50, false)
        .unwrap();
    let wins = rows.iter().filter(|r| r.freq_min_rank <= r.spatial_min_rank).count();
    assert!(wins >= 45, "{wins}/50");
}

#[test]
fn tail_ratio_within_bound_for_moderate_rho() {
    for rho in [0.5, 0.7, 0.9] {
        let rep = tail_ratio_check(&StationaryFieldSpec { rows: 64, cols: 64, rho, seed: 0 }, 4, 30).unwrap();
        assert!(rep.pass, "rho {rho}: {} vs {}", rep.mean_ratio, rep.bound);
    }
}

#[test]
fn tail_ratio_small_rho_exceeds_bound() {
    // the ratio tends to the half-spectrum share of a white tail while the
    // bound tends to zero; recorded as measured, not as a pass
    let rep = tail_ratio_check(&StationaryFieldSpec { rows: 64, cols: 64, rho: 0.3, seed: 0 }, 8, 20).unwrap();
    assert!(!rep.pass);
    assert!(rep.mean_ratio > 0.3 && rep.mean_ratio < 0.6, "{}", rep.mean_ratio);
    assert!((rep.bound - 0.09 / 0.8281).abs() < 1e-12);
}

#[test]
fn trials_are_pure_functions_of_seed() {
    let spec = StationaryFieldSpec { rows: 16, cols: 16, rho: 0.8, seed: 42 };
    let a = domain_trials(&spec, 4, 0.01, 6, true).unwrap();
    let b = domain_trials(&spec, 4, 0.01, 6, true).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.iter().map(|r| r.seed).collect::<Vec<_>>(), (42..48).collect::<Vec<_>>());
    let single = domain_trials(&spec.with_seed(45), 4, 0.01, 1, true).unwrap();
    assert_eq!(single[0], a[3]);
}

#[test]
fn pure_phase_residual_ablation() {
    let mut r = rng(9);
    let residual = Array2::from_shape_fn((32, 17), |_| Complex64::from_polar(1.0, r.random_range(-PI..PI)));
    let rows = ablate_residual(&residual, 4).unwrap();
    let polar = &rows[0];
    assert_eq!(polar.scheme, "polar");
    let dt = falq::polarquant::phase_step(4);
    assert!(polar.mean_abs_phase_err <= dt / 2.0);
    let code = falq::polarquant::polar_quantize(&residual, 4, 4).unwrap();
    for (k, z) in residual.iter().enumerate() {
        assert!(falq::polarquant::wrap_angle(z.arg() - code.phase(k)).abs() <= dt / 2.0 * (1.0 + 1e-12));
    }
    assert_eq!(rows[1].scheme, "qim");
    assert!(rows[1].mean_abs_phase_err > 0.0);
}

#[test]
fn gaussian_residual_ablation_rows() {
    let w = field(32, 32, 0.5, 11);
    let rows = quantizer_ablation(&w, 4, 4).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(r.mean_abs_phase_err.is_finite() && r.mean_abs_phase_err > 0.0);
        assert!(r.reconstruction_rel_err > 0.0 && r.reconstruction_rel_err < 1.0);
    }
    let mut buf = Vec::new();
    write_csv(&mut buf, &rows).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next(), Some("scheme,bits_a,bits_b,mean_abs_phase_err,reconstruction_rel_err"));
}

#[test]
fn bench_summary_properties() {
    let spec = BenchSpec { n_seeds: 5, rows: 32, cols: 32, ..BenchSpec::default() };
    let (rows, summary) = run_bench(&spec).unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(summary.properties.len(), 2);
    assert!(summary.properties[0].pass);
    assert!(run_bench(&BenchSpec { n_seeds: 1, ..spec }).is_err());
    let parsed: BenchSpec = serde_json::from_str(r#"{"rho": 0.5}"#).unwrap();
    assert_eq!(parsed, BenchSpec { rho: 0.5, ..BenchSpec::default() });
    assert!(serde_json::from_str::<BenchSpec>(r#"{"nope": 1}"#).is_err());
}
