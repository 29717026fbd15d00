//! Independent brute-force oracles: spark by exhaustive subset
//! enumeration, exact restricted-isometry constants, uniqueness rank
//! tests for the vectorized block system, condition-number tail Monte
//! Carlo, and measurement-budget arithmetic.
//!
//! The combinatorial guards are hard errors on purpose: a truncated
//! search is reported as a bound, never silently passed off as exact.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;
use crate::sampling::CommonOperator;
use crate::solver::BlockSystem;
use crate::C64;

const RANK_TOL: f64 = 1e-10;
const SPARK_GUARD_COLS: usize = 24;
const SPARK_GUARD_CARD: usize = 6;
const SPARK_GUARD_SUBSETS: f64 = 2e7;
const RIP_GUARD_SUBSETS: f64 = 2e5;

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc *= (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Visit all k-subsets of 0..n in lexicographic order until `f` returns true.
fn any_combination(n: usize, k: usize, mut f: impl FnMut(&[usize]) -> bool) -> bool {
    if k > n {
        return false;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if f(&idx) {
            return true;
        }
        // advance
        let mut i = k;
        loop {
            if i == 0 {
                return false;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return false;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Result of a bounded spark search.
///
/// When `witness` is `Some`, `spark` is exact and the witness is a minimal
/// linearly dependent column set. When `witness` is `None`, no dependent
/// subset of size <= `searched_to` exists, so `spark` is the certified
/// lower bound `searched_to + 1` (exact whenever `searched_to` covers all
/// columns, the sentinel "all columns independent" case).
#[derive(Debug, Clone)]
pub struct SparkResult {
    pub spark: usize,
    pub witness: Option<Vec<usize>>,
    pub searched_to: usize,
}

/// Smallest cardinality of a linearly dependent column subset, by
/// exhaustive enumeration in increasing cardinality. Rank decisions use
/// an SVD with tolerance `1e-10 * sigma_max` of the subset.
pub fn spark_bruteforce(m: &DMatrix<C64>, max_cardinality: usize) -> Result<SparkResult> {
    let cols = m.ncols();
    let rows = m.nrows();
    let max_card = max_cardinality.min(cols);
    if !(cols <= SPARK_GUARD_COLS || max_cardinality <= SPARK_GUARD_CARD) {
        return Err(Error::TooLarge(format!(
            "spark search over {cols} columns up to cardinality {max_cardinality}"
        )));
    }
    let mut work = 0.0;
    for c in 1..=max_card.min(rows) {
        work += binomial(cols, c);
    }
    if work > SPARK_GUARD_SUBSETS {
        return Err(Error::TooLarge(format!("{work:.2e} subsets to enumerate")));
    }

    for c in 1..=max_card {
        if c > rows {
            // more columns than rows are always dependent; minimality is
            // guaranteed because every smaller cardinality was exhausted
            return Ok(SparkResult {
                spark: c,
                witness: Some((0..c).collect()),
                searched_to: max_card,
            });
        }
        let mut witness = None;
        any_combination(cols, c, |idx| {
            let sub = m.select_columns(idx.iter());
            let sv = linalg::singular_values(&sub);
            let smax = sv[0];
            let smin = sv[sv.len() - 1];
            if smin <= RANK_TOL * smax || smax == 0.0 {
                witness = Some(idx.to_vec());
                true
            } else {
                false
            }
        });
        if let Some(w) = witness {
            return Ok(SparkResult { spark: c, witness: Some(w), searched_to: max_card });
        }
    }
    Ok(SparkResult { spark: max_card + 1, witness: None, searched_to: max_card })
}

/// Exhaustive restricted-isometry constant for sparsity k.
#[derive(Debug, Clone)]
pub struct RipEstimate {
    pub k: usize,
    /// max over all k-column subsets S of max(1 - sigma_min^2, sigma_max^2 - 1)
    /// of the subset, for the operator exactly as given.
    pub delta_k: f64,
    pub extremal_support: Vec<usize>,
}

/// Tight delta_k over every k-column submatrix of `phi`, for `phi` as
/// given. The caller chooses the scaling; see [`rip_normalized`] for the
/// ensemble scaling that makes `E |phi x|^2 = |x|^2`.
pub fn rip_delta_bruteforce(phi: &DMatrix<C64>, k: usize) -> Result<RipEstimate> {
    let n = phi.ncols();
    if k == 0 || k > n {
        return Err(Error::InvalidParams(format!("k = {k} with {n} columns")));
    }
    let count = binomial(n, k);
    if count > RIP_GUARD_SUBSETS {
        return Err(Error::TooLarge(format!("C({n},{k}) = {count:.2e} subsets")));
    }
    let mut delta = f64::NEG_INFINITY;
    let mut extremal = Vec::new();
    any_combination(n, k, |idx| {
        let sub = phi.select_columns(idx.iter());
        let gram = sub.adjoint() * &sub;
        let (evals, _) = linalg::hermitian_eigen_desc(&gram);
        let lmax = evals[0];
        let lmin = evals[evals.len() - 1];
        let d = (lmax - 1.0).max(1.0 - lmin);
        if d > delta {
            delta = d;
            extremal = idx.to_vec();
        }
        false
    });
    Ok(RipEstimate { k, delta_k: delta, extremal_support: extremal })
}

/// Operator matrix scaled by 1/sqrt(rows) so that the Gaussian and
/// radial-Fourier ensembles are near-isometric in expectation.
pub fn rip_normalized(phi: &CommonOperator) -> DMatrix<C64> {
    phi.phi().scale(1.0 / (phi.s() as f64).sqrt())
}

/// True iff the dense block matrix restricted to the vec(P) columns whose
/// row index lies in `support` has full column rank, i.e. the coefficient
/// matrix is uniquely determined given that support.
pub fn uniqueness_check(sys: &BlockSystem, support: &[usize]) -> Result<bool> {
    let n = sys.n();
    let r = sys.rank();
    if support.is_empty() || support.iter().any(|&i| i >= n) {
        return Err(Error::InvalidParams("support indices out of range".into()));
    }
    let dense = sys.dense()?;
    let mut cols = Vec::with_capacity(support.len() * r);
    for j in 0..r {
        for &row in support {
            cols.push(j * n + row);
        }
    }
    let restricted = dense.select_columns(cols.iter());
    if restricted.nrows() < restricted.ncols() {
        return Ok(false);
    }
    let sv = linalg::singular_values(&restricted);
    Ok(sv[sv.len() - 1] > RANK_TOL * sv[0])
}

/// Empirical tail of the condition number of `phi * u` for Gaussian `phi`
/// (s x n) against a random orthonormal n x r basis.
#[derive(Debug, Clone)]
pub struct KappaTailTable {
    pub s: usize,
    pub r: usize,
    pub trials: usize,
    pub c_values: Vec<f64>,
    pub exceed_counts: Vec<usize>,
    pub frequencies: Vec<f64>,
    /// Least-squares slope of log frequency vs log c, restricted to grid
    /// points whose exceed count is at least 10; `None` with fewer than
    /// two usable points.
    pub slope: Option<f64>,
}

const TAIL_FIT_MIN_COUNT: usize = 10;

/// Monte Carlo estimate of `Pr[kappa(phi u) > c]` over the c grid, with a
/// fitted log-log tail slope. Per-trial seeds derive from (seed, trial),
/// so the table is reproducible and schedule-independent.
pub fn kappa_tail_montecarlo(
    s: usize,
    r: usize,
    trials: usize,
    c_grid: &[f64],
    seed: u64,
) -> Result<KappaTailTable> {
    if r == 0 || s < r {
        return Err(Error::InvalidDims(format!("require s >= r >= 1, got s={s} r={r}")));
    }
    if trials < 100 {
        return Err(Error::InvalidParams("need at least 100 trials".into()));
    }
    if c_grid.is_empty() || c_grid.iter().any(|&c| !(c > 1.0)) {
        return Err(Error::InvalidParams("c grid must be > 1".into()));
    }
    let n = 2 * s.max(r);
    let mut kappas = Vec::with_capacity(trials);
    for t in 0..trials {
        let mut trial_rng = rng::stream(seed, t as u64);
        let phi = linalg::complex_gaussian(s, n, &mut trial_rng);
        let u = linalg::random_orthonormal(n, r, &mut trial_rng);
        let sv = linalg::singular_values(&(&phi * &u));
        kappas.push(sv[0] / sv[sv.len() - 1]);
    }

    let exceed_counts: Vec<usize> = c_grid
        .iter()
        .map(|&c| kappas.iter().filter(|&&k| k > c).count())
        .collect();
    let frequencies: Vec<f64> =
        exceed_counts.iter().map(|&ct| ct as f64 / trials as f64).collect();

    let pts: Vec<(f64, f64)> = c_grid
        .iter()
        .zip(&exceed_counts)
        .filter(|(_, &ct)| ct >= TAIL_FIT_MIN_COUNT)
        .map(|(&c, &ct)| (c.ln(), (ct as f64 / trials as f64).ln()))
        .collect();
    let slope = if pts.len() >= 2 {
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        let denom = n * sxx - sx * sx;
        (denom.abs() > 0.0).then(|| (n * sxy - sx * sy) / denom)
    } else {
        None
    };

    Ok(KappaTailTable { s, r, trials, c_values: c_grid.to_vec(), exceed_counts, frequencies, slope })
}

/// Measurement counts for the clustered two-step scheme vs the classical
/// single-operator (MMV) scheme, plus the matrix degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementBudget {
    /// (2k - r + N) r
    pub proposed_total: u64,
    /// r + 2 k r / N, in measurements per frame (may be fractional).
    pub proposed_per_frame: f64,
    /// (2k - r + 1) N
    pub mmv_total: u64,
    /// r (n + N - r)
    pub dof: u64,
}

pub fn measurement_budget(k: u64, r: u64, n: u64, num_frames: u64) -> Result<MeasurementBudget> {
    if r == 0 || k < r || num_frames == 0 || n < k {
        return Err(Error::InvalidParams(format!(
            "require n >= k >= r >= 1 and N >= 1, got k={k} r={r} n={n} N={num_frames}"
        )));
    }
    Ok(MeasurementBudget {
        proposed_total: (2 * k - r + num_frames) * r,
        proposed_per_frame: r as f64 + 2.0 * (k * r) as f64 / num_frames as f64,
        mmv_total: (2 * k - r + 1) * num_frames,
        dof: r * (n + num_frames - r),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::complex_gaussian;
    use crate::rng::stream;

    #[test]
    fn spark_identity_is_sentinel() {
        let m = DMatrix::<C64>::identity(4, 4).map(|x| C64::new(x.re, 0.0));
        let res = spark_bruteforce(&m, 4).unwrap();
        assert_eq!(res.spark, 5);
        assert!(res.witness.is_none());
    }

    #[test]
    fn spark_duplicate_column_is_two() {
        let mut rng = stream(1, 0);
        let mut m = complex_gaussian(5, 6, &mut rng);
        let c0 = m.column(0).into_owned();
        m.set_column(3, &c0);
        let res = spark_bruteforce(&m, 6).unwrap();
        assert_eq!(res.spark, 2);
        assert_eq!(res.witness, Some(vec![0, 3]));
    }

    #[test]
    fn spark_of_wide_gaussian_is_rows_plus_one() {
        let mut rng = stream(2, 0);
        let m = complex_gaussian(5, 10, &mut rng);
        let res = spark_bruteforce(&m, 6).unwrap();
        assert_eq!(res.spark, 6);
        assert!(res.witness.is_some());
    }

    #[test]
    fn spark_guard_rejects_huge_search() {
        let mut rng = stream(3, 0);
        let m = complex_gaussian(4, 30, &mut rng);
        assert!(matches!(spark_bruteforce(&m, 12), Err(Error::TooLarge(_))));
    }

    #[test]
    fn spark_bounded_search_reports_lower_bound() {
        let mut rng = stream(4, 0);
        let m = complex_gaussian(8, 12, &mut rng);
        let res = spark_bruteforce(&m, 3).unwrap();
        assert_eq!(res.searched_to, 3);
        assert_eq!(res.spark, 4);
        assert!(res.witness.is_none());
    }

    #[test]
    fn rip_orthonormal_columns_delta1_zero() {
        let mut rng = stream(5, 0);
        let q = crate::linalg::random_orthonormal(8, 4, &mut rng);
        let est = rip_delta_bruteforce(&q, 1).unwrap();
        assert!(est.delta_k.abs() < 1e-10);
    }

    #[test]
    fn rip_two_column_closed_form() {
        // phi = [e1, (e1 + eps e2)/sqrt(1 + eps^2)]: Gram eigenvalues 1 +- |c|
        // with c = <phi_2, phi_1> = 1/sqrt(1 + eps^2), so delta_2 = |c|.
        let eps = 0.3f64;
        let nrm = (1.0 + eps * eps).sqrt();
        let mut phi = DMatrix::<C64>::zeros(4, 2);
        phi[(0, 0)] = C64::new(1.0, 0.0);
        phi[(0, 1)] = C64::new(1.0 / nrm, 0.0);
        phi[(1, 1)] = C64::new(eps / nrm, 0.0);
        let est = rip_delta_bruteforce(&phi, 2).unwrap();
        assert!((est.delta_k - 1.0 / nrm).abs() < 1e-12);
        assert_eq!(est.extremal_support, vec![0, 1]);
    }

    #[test]
    fn rip_monotone_in_k() {
        let mut rng = stream(6, 0);
        let phi = complex_gaussian(8, 10, &mut rng).scale(1.0 / (8f64).sqrt());
        let mut prev = 0.0;
        for k in 1..=4 {
            let est = rip_delta_bruteforce(&phi, k).unwrap();
            assert!(est.delta_k >= prev - 1e-12, "delta_{k} decreased");
            prev = est.delta_k;
        }
    }

    #[test]
    fn rip_guard_rejects_huge_search() {
        let mut rng = stream(7, 0);
        let phi = complex_gaussian(10, 60, &mut rng);
        assert!(matches!(rip_delta_bruteforce(&phi, 6), Err(Error::TooLarge(_))));
    }

    #[test]
    fn kappa_tail_is_reproducible_and_square_case_heavy() {
        let grid: Vec<f64> = (0..14).map(|i| 2.0 * (50.0f64 / 2.0).powf(i as f64 / 13.0)).collect();
        let a = kappa_tail_montecarlo(3, 3, 800, &grid, 11).unwrap();
        let b = kappa_tail_montecarlo(3, 3, 800, &grid, 11).unwrap();
        assert_eq!(a.exceed_counts, b.exceed_counts);
        let slope = a.slope.expect("enough tail mass at s = r");
        assert!(slope <= -1.0, "square-case tail slope {slope}");
        assert!(slope >= -3.5, "square-case slope implausibly steep: {slope}");
    }

    #[test]
    fn kappa_tail_validates_inputs() {
        assert!(kappa_tail_montecarlo(2, 3, 500, &[2.0], 0).is_err());
        assert!(kappa_tail_montecarlo(3, 3, 10, &[2.0], 0).is_err());
        assert!(kappa_tail_montecarlo(3, 3, 500, &[0.5], 0).is_err());
    }

    #[test]
    fn budget_formulas_exact() {
        let b = measurement_budget(12, 5, 100, 40).unwrap();
        assert_eq!(b.proposed_total, (24 - 5 + 40) * 5);
        assert_eq!(b.proposed_total, 295);
        assert_eq!(b.mmv_total, 20 * 40);
        assert_eq!(b.dof, 5 * (100 + 40 - 5));
        assert!((b.proposed_per_frame - (5.0 + 2.0 * 12.0 * 5.0 / 40.0)).abs() < 1e-9);

        let tiny = measurement_budget(1, 1, 1, 1).unwrap();
        assert_eq!(tiny.proposed_total, 2);
        assert_eq!(tiny.mmv_total, 2);

        assert!(measurement_budget(2, 3, 10, 4).is_err());
        assert!(measurement_budget(0, 0, 10, 4).is_err());
    }
}
