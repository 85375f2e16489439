//! Complex singular value decomposition and rank truncation.
//!
//! The decomposition is a one-sided (Hestenes) Jacobi iteration on the
//! columns of the taller orientation of the input. Output conventions:
//!
//! * singular values are sorted descending, ties keep their column order;
//! * the largest-modulus entry of every right singular vector is real and
//!   positive (first such entry on ties);
//! * left singular vectors belonging to values below [`RANK_FLOOR`]`·σ₀` are
//!   completed to an orthonormal set rather than normalized from noise.

use ndarray::{Array2, Axis};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Singular values at or below `RANK_FLOOR * s[0]` count as zero rank.
pub const RANK_FLOOR: f64 = 1e-12;
const MAX_SWEEPS: usize = 80;

#[derive(Debug, Clone)]
pub struct ComplexSvd {
    /// `rows × k` with orthonormal columns.
    pub u: Array2<Complex64>,
    /// Length `k = min(rows, cols)`, descending, non-negative.
    pub s: Vec<f64>,
    /// `k × cols` with orthonormal rows.
    pub vh: Array2<Complex64>,
}

impl ComplexSvd {
    /// Number of singular values above the numerical floor.
    pub fn rank(&self) -> usize {
        let floor = self.s.first().copied().unwrap_or(0.0) * RANK_FLOOR;
        self.s.iter().take_while(|&&x| x > floor && x > 0.0).count()
    }

    pub fn reconstruct(&self) -> Array2<Complex64> {
        let mut us = self.u.clone();
        for (mut col, &s) in us.axis_iter_mut(Axis(1)).zip(self.s.iter()) {
            col.mapv_inplace(|z| z * s);
        }
        us.dot(&self.vh)
    }
}

/// Rank-`r` factor pair `L1 = U_r √Σ_r`, `L2 = √Σ_r V_rᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactors {
    /// `rows × r`.
    pub l1: Array2<Complex64>,
    /// `r × cols`.
    pub l2: Array2<Complex64>,
    pub kept_singular_values: Vec<f64>,
}

impl LowRankFactors {
    pub fn rank(&self) -> usize {
        self.l1.ncols()
    }

    pub fn product(&self) -> Array2<Complex64> {
        self.l1.dot(&self.l2)
    }

    /// Empty factors for a `rows × cols` target.
    pub fn zero(rows: usize, cols: usize) -> Self {
        LowRankFactors {
            l1: Array2::zeros((rows, 0)),
            l2: Array2::zeros((0, cols)),
            kept_singular_values: Vec::new(),
        }
    }
}

/// Column-major working copy of the matrix being orthogonalized.
struct Columns {
    cols: Vec<Vec<Complex64>>,
}

fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm_sqr(a: &[Complex64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

/// Applies the unitary 2×2 rotation to a column pair.
fn rotate(p: &mut [Complex64], q: &mut [Complex64], c: f64, s: f64, phase: Complex64) {
    for (x, y) in p.iter_mut().zip(q.iter_mut()) {
        let yq = *y * phase;
        let xp = *x;
        *x = xp * c - yq * s;
        *y = xp * s + yq * c;
    }
}

fn pair_mut<T>(v: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    debug_assert!(i < j);
    let (a, b) = v.split_at_mut(j);
    (&mut a[i], &mut b[0])
}

/// Orthogonalizes the columns of `a`; returns the accumulated right rotations.
fn jacobi(a: &mut Columns) -> Result<Vec<Vec<Complex64>>> {
    let n = a.cols.len();
    let m = a.cols.first().map_or(0, Vec::len);
    let mut v: Vec<Vec<Complex64>> = (0..n)
        .map(|j| {
            let mut e = vec![Complex64::default(); n];
            e[j] = Complex64::new(1.0, 0.0);
            e
        })
        .collect();
    let tol = f64::EPSILON * (m.max(1) as f64);
    let mut norms: Vec<f64> = a.cols.iter().map(|c| norm_sqr(c)).collect();
    // columns below this squared norm are roundoff; rotating them never settles
    let negligible = (f64::EPSILON * (m.max(1) as f64)).powi(2) * norms.iter().sum::<f64>();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta) = (norms[p], norms[q]);
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma = dot_conj(&a.cols[p], &a.cols[q]);
                let g = gamma.norm();
                if g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma.conj() / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let (cp, cq) = pair_mut(&mut a.cols, p, q);
                rotate(cp, cq, c, s, phase);
                let (vp, vq) = pair_mut(&mut v, p, q);
                rotate(vp, vq, c, s, phase);
                norms[p] = norm_sqr(&a.cols[p]);
                norms[q] = norm_sqr(&a.cols[q]);
            }
        }
        if !rotated {
            return Ok(v);
        }
    }
    let mut residual = 0.0f64;
    for p in 0..n {
        for q in p + 1..n {
            let denom = (norms[p] * norms[q]).sqrt();
            if norms[p] > negligible && norms[q] > negligible {
                residual = residual.max(dot_conj(&a.cols[p], &a.cols[q]).norm() / denom);
            }
        }
    }
    Err(Error::NoConvergence {
        sweeps: MAX_SWEEPS,
        residual,
    })
}

/// Fills in unit vectors orthogonal to everything in `basis` for every `None`
/// slot, scanning standard basis vectors in order.
fn complete_orthonormal(slots: &mut [Option<Vec<Complex64>>], dim: usize) {
    let mut candidate = 0;
    for k in 0..slots.len() {
        if slots[k].is_some() {
            continue;
        }
        loop {
            assert!(candidate < dim, "cannot complete more vectors than dimension");
            let mut e = vec![Complex64::default(); dim];
            e[candidate] = Complex64::new(1.0, 0.0);
            candidate += 1;
            // two passes of Gram-Schmidt
            for _ in 0..2 {
                for b in slots.iter().flatten() {
                    let proj = dot_conj(b, &e);
                    e.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
                }
            }
            let nrm = norm_sqr(&e).sqrt();
            if nrm > 0.5 {
                e.iter_mut().for_each(|x| *x /= nrm);
                slots[k] = Some(e);
                break;
            }
        }
    }
}

/// Thin SVD `R = U diag(S) Vh` of a complex matrix.
pub fn complex_svd(r: &Array2<Complex64>) -> Result<ComplexSvd> {
    if r.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (rows, cols) = r.dim();
    let tall = rows >= cols;
    // work on the orientation with at least as many rows as columns
    let work = if tall {
        r.clone()
    } else {
        r.t().mapv(|z| z.conj())
    };
    let (m, k) = work.dim();
    let mut a = Columns {
        cols: work.axis_iter(Axis(1)).map(|c| c.to_vec()).collect(),
    };
    let v = jacobi(&mut a)?;

    let sigma: Vec<f64> = a.cols.iter().map(|c| norm_sqr(c).sqrt()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]));
    let s: Vec<f64> = order.iter().map(|&i| sigma[i]).collect();
    let floor = s.first().copied().unwrap_or(0.0) * RANK_FLOOR;

    let mut left: Vec<Option<Vec<Complex64>>> = order
        .iter()
        .map(|&i| {
            (sigma[i] > floor && sigma[i] > 0.0)
                .then(|| a.cols[i].iter().map(|z| z / sigma[i]).collect())
        })
        .collect();
    complete_orthonormal(&mut left, m);
    let left: Vec<Vec<Complex64>> = left.into_iter().map(|x| x.expect("completed")).collect();
    let right: Vec<&Vec<Complex64>> = order.iter().map(|&i| &v[i]).collect();

    // work = Lw diag(s) Rwᴴ; for the wide case R = workᴴ = Rw diag(s) Lwᴴ
    let (mut u, mut vh) = if tall {
        (
            Array2::from_shape_fn((rows, k), |(i, j)| left[j][i]),
            Array2::from_shape_fn((k, cols), |(j, i)| right[j][i].conj()),
        )
    } else {
        (
            Array2::from_shape_fn((rows, k), |(i, j)| right[j][i]),
            Array2::from_shape_fn((k, cols), |(j, i)| left[j][i].conj()),
        )
    };

    // largest-modulus entry of each right singular vector made real-positive
    for j in 0..k {
        let mut best = 0usize;
        let mut best_mod = -1.0f64;
        for (i, z) in vh.row(j).iter().enumerate() {
            let md = z.norm();
            if md > best_mod {
                best = i;
                best_mod = md;
            }
        }
        if best_mod <= 0.0 {
            continue;
        }
        // v = conj(vh row); want v[best] real-positive
        let v_entry = vh[[j, best]].conj();
        let unit = v_entry / v_entry.norm();
        vh.row_mut(j).mapv_inplace(|z| z * unit);
        vh[[j, best]] = Complex64::new(vh[[j, best]].norm(), 0.0);
        u.column_mut(j).mapv_inplace(|z| z * unit.conj());
    }

    Ok(ComplexSvd { u, s, vh })
}

/// Keeps the top `r` singular triplets as `L1 = U_r √Σ_r`, `L2 = √Σ_r V_rᴴ`.
pub fn truncate_factors(svd: &ComplexSvd, r: usize) -> Result<LowRankFactors> {
    let k = svd.s.len();
    if r == 0 || r > k {
        return Err(Error::RankOutOfRange { rank: r, max: k });
    }
    let roots: Vec<f64> = svd.s[..r].iter().map(|s| s.sqrt()).collect();
    let l1 = Array2::from_shape_fn((svd.u.nrows(), r), |(i, j)| svd.u[[i, j]] * roots[j]);
    let l2 = Array2::from_shape_fn((r, svd.vh.ncols()), |(j, i)| svd.vh[[j, i]] * roots[j]);
    Ok(LowRankFactors {
        l1,
        l2,
        kept_singular_values: svd.s[..r].to_vec(),
    })
}

/// `sqrt(Σ_{k ≥ r} s[k]²)` (zero-based), the Frobenius error of rank-`r`
/// truncation.
pub fn truncation_error(s: &[f64], r: usize) -> f64 {
    s.iter().skip(r).map(|x| x * x).sum::<f64>().sqrt()
}

/// Smallest rank whose relative truncation error is at most `target_rel`.
pub fn min_rank_for_error(s: &[f64], target_rel: f64) -> usize {
    let total = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    if total == 0.0 {
        return 1;
    }
    // tail energies from the back, so each r costs O(1)
    let mut tails = vec![0.0; s.len() + 1];
    for i in (0..s.len()).rev() {
        tails[i] = tails[i + 1] + s[i] * s[i];
    }
    (1..=s.len())
        .find(|&r| tails[r].sqrt() / total <= target_rel)
        .unwrap_or(s.len())
}

/// Complex copy of a real matrix.
pub fn complexify(m: &Array2<f64>) -> Array2<Complex64> {
    m.mapv(|x| Complex64::new(x, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_complex(rows: usize, cols: usize, seed: u64) -> Array2<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((rows, cols), |_| {
            c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn fro(a: &Array2<Complex64>) -> f64 {
        a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    fn max_dev_from_identity(g: &Array2<Complex64>) -> f64 {
        g.indexed_iter()
            .map(|((i, j), z)| (z - if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) }).norm())
            .fold(0.0, f64::max)
    }

    fn check_invariants(r: &Array2<Complex64>, svd: &ComplexSvd) {
        let k = r.nrows().min(r.ncols());
        assert_eq!(svd.s.len(), k);
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
        assert!(svd.s.iter().all(|&x| x >= 0.0));
        let uhu = svd.u.t().mapv(|z| z.conj()).dot(&svd.u);
        let vvh = svd.vh.dot(&svd.vh.t().mapv(|z| z.conj()));
        assert!(max_dev_from_identity(&uhu) < 1e-8);
        assert!(max_dev_from_identity(&vvh) < 1e-8);
        let err = fro(&(&svd.reconstruct() - r));
        assert!(err <= 1e-8 * fro(r).max(1e-300), "{err}");
    }

    #[test]
    fn diagonal() {
        let r = Array2::from_shape_vec((2, 2), vec![c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let svd = complex_svd(&r).unwrap();
        assert!((svd.s[0] - 3.0).abs() < 1e-14 && (svd.s[1] - 1.0).abs() < 1e-14);
        check_invariants(&r, &svd);
    }

    #[test]
    fn single_imaginary_entry() {
        let r = Array2::from_shape_vec((2, 2), vec![c(0.0, 0.0), c(0.0, 1.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        let svd = complex_svd(&r).unwrap();
        assert!((svd.s[0] - 1.0).abs() < 1e-14 && svd.s[1] == 0.0);
        assert_eq!(svd.rank(), 1);
        check_invariants(&r, &svd);
    }

    #[test]
    fn shapes_and_invariants() {
        for (i, (rows, cols)) in [(12, 7), (7, 12), (1, 5), (5, 1), (9, 9), (3, 3)].into_iter().enumerate() {
            let r = random_complex(rows, cols, i as u64);
            check_invariants(&r, &complex_svd(&r).unwrap());
        }
    }

    #[test]
    fn zero_matrix() {
        let r = Array2::<Complex64>::zeros((4, 3));
        let svd = complex_svd(&r).unwrap();
        assert!(svd.s.iter().all(|&x| x == 0.0));
        assert_eq!(svd.rank(), 0);
        check_invariants(&r, &svd);
    }

    #[test]
    fn rank_deficient() {
        let a = random_complex(8, 2, 7);
        let b = random_complex(2, 6, 8);
        let r = a.dot(&b);
        let svd = complex_svd(&r).unwrap();
        assert_eq!(svd.rank(), 2);
        check_invariants(&r, &svd);
    }

    #[test]
    fn phase_convention() {
        let svd = complex_svd(&random_complex(6, 4, 3)).unwrap();
        for row in svd.vh.rows() {
            let (j, _) = row
                .iter()
                .enumerate()
                .fold((0, -1.0), |acc, (j, z)| if z.norm() > acc.1 { (j, z.norm()) } else { acc });
            // v = conj(vh row) has a real-positive largest entry
            assert_eq!(row[j].im, 0.0);
            assert!(row[j].re > 0.0);
        }
    }

    #[test]
    fn deterministic() {
        let r = random_complex(10, 6, 12);
        let a = complex_svd(&r).unwrap();
        let b = complex_svd(&r).unwrap();
        assert_eq!(a.s, b.s);
        assert_eq!(a.u, b.u);
        assert_eq!(a.vh, b.vh);
    }

    #[test]
    fn non_finite_rejected() {
        let mut r = random_complex(3, 3, 1);
        r[[1, 1]] = c(f64::NAN, 0.0);
        assert!(matches!(complex_svd(&r), Err(Error::NonFinite)));
    }

    #[test]
    fn truncate_full_and_partial() {
        let r = random_complex(6, 5, 2);
        let svd = complex_svd(&r).unwrap();
        let full = truncate_factors(&svd, 5).unwrap();
        assert!(fro(&(&full.product() - &r)) < 1e-8 * fro(&r));
        let diag = Array2::from_shape_vec((2, 2), vec![c(3.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        let f = truncate_factors(&complex_svd(&diag).unwrap(), 1).unwrap();
        assert!((fro(&(&diag - &f.product())) - 1.0).abs() < 1e-12);
        assert_eq!(f.kept_singular_values, vec![3.0]);
        assert!(matches!(truncate_factors(&svd, 0), Err(Error::RankOutOfRange { .. })));
        assert!(matches!(truncate_factors(&svd, 6), Err(Error::RankOutOfRange { .. })));
    }

    #[test]
    fn truncation_error_values() {
        assert_eq!(truncation_error(&[3.0, 1.0], 1), 1.0);
        assert_eq!(truncation_error(&[3.0, 1.0], 2), 0.0);
        assert_eq!(truncation_error(&[3.0, 1.0], 7), 0.0);
        assert!((truncation_error(&[5.0, 4.0, 3.0, 2.0, 1.0], 2) - 14f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn min_rank_values() {
        let mut s = vec![0.0; 10];
        s[0] = 1.0;
        assert_eq!(min_rank_for_error(&s, 0.01), 1);
        assert_eq!(min_rank_for_error(&[3.0, 1.0], 0.5), 1);
        assert_eq!(min_rank_for_error(&[0.0, 0.0], 0.5), 1);
        // geometric decay: brute-force scan
        let g: Vec<f64> = (0..20).map(|k| 0.5f64.powi(k)).collect();
        let total = truncation_error(&g, 0);
        let scan = (1..=20).find(|&r| truncation_error(&g, r) / total <= 0.01).unwrap();
        assert_eq!(min_rank_for_error(&g, 0.01), scan);
        assert_eq!(scan, 7);
    }

    #[test]
    fn exactly_low_rank_inputs_converge() {
        for (rows, cols, rank) in [(8, 10, 1), (10, 8, 1), (8, 6, 1), (12, 12, 2), (9, 16, 3)] {
            let mut rng = ChaCha8Rng::seed_from_u64((rows * cols + rank) as u64);
            let u = Array2::from_shape_fn((rows, rank), |(i, k)| c((i + k + 1) as f64, rng.random::<f64>()));
            let v = Array2::from_shape_fn((rank, cols), |_| c(rng.random::<f64>() - 0.5, 0.0));
            let a = u.dot(&v);
            let svd = complex_svd(&a).unwrap();
            assert_eq!(svd.rank(), rank, "{rows}x{cols}");
            assert!(fro(&(&svd.reconstruct() - &a)) < 1e-12 * fro(&a));
            assert!(svd.s[rank] < 1e-10 * svd.s[0]);
        }
    }
}
