//! Small complex linear-algebra helpers shared by the rest of the crate.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::C64;

/// Entries i.i.d. complex Gaussian with unit complex variance
/// (real and imaginary parts each have variance 1/2).
pub fn complex_gaussian(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid stddev");
    DMatrix::from_fn(rows, cols, |_, _| C64::new(normal.sample(rng), normal.sample(rng)))
}

pub fn is_finite_matrix(m: &DMatrix<C64>) -> bool {
    m.iter().all(|c| c.re.is_finite() && c.im.is_finite())
}

/// Singular values only, descending.
pub fn singular_values(m: &DMatrix<C64>) -> DVector<f64> {
    m.clone().svd(false, false).singular_values
}

/// Thin SVD factors `(u, sigma, v)` with `m = u * diag(sigma) * v^H`,
/// sigma descending, u and v of width `min(rows, cols)`.
pub fn svd_thin(m: &DMatrix<C64>) -> Result<(DMatrix<C64>, DVector<f64>, DMatrix<C64>)> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.ok_or_else(|| Error::Numerical("svd did not produce u".into()))?;
    let v_t = svd.v_t.ok_or_else(|| Error::Numerical("svd did not produce v^H".into()))?;
    Ok((u, svd.singular_values, v_t.adjoint()))
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
/// The input is re-symmetrized first so roundoff in a Gram product
/// cannot leak into complex eigenvalues.
pub fn hermitian_eigen_desc(g: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let h = (g + g.adjoint()).scale(0.5);
    let eig = nalgebra::SymmetricEigen::new(h);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = eig.eigenvectors.select_columns(order.iter());
    (values, vectors)
}

/// Orthonormal basis for the column span of `m` (thin QR; `m` must be
/// tall with full column rank for the result to have `m.ncols()` columns).
pub fn orthonormalize_columns(m: &DMatrix<C64>) -> DMatrix<C64> {
    m.clone().qr().q()
}

/// Random matrix with orthonormal columns.
pub fn random_orthonormal(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    orthonormalize_columns(&complex_gaussian(rows, cols, rng))
}

/// sigma_max / sigma_min from a descending singular-value list;
/// infinity when rank-deficient relative to the smallest dimension.
pub fn condition_from_singvals(sv: &[f64]) -> f64 {
    let smax = sv.first().copied().unwrap_or(0.0);
    let smin = sv.last().copied().unwrap_or(0.0);
    if smin < 1e-14 * smax {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Max absolute deviation of `v^H v` from the identity.
pub fn orthonormality_defect(v: &DMatrix<C64>) -> f64 {
    let g = v.adjoint() * v;
    let r = g.ncols();
    let mut worst = 0.0f64;
    for i in 0..r {
        for j in 0..r {
            let target = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

/// Relative Frobenius distance `|a - b| / max(|a|, floor)`.
pub fn rel_frobenius(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let denom = a.norm().max(f64::MIN_POSITIVE);
    (a - b).norm() / denom
}
