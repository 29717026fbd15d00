//! Row-subspace estimation from common measurements.
//!
//! With z = phi x and x = u diag(sigma) v^H, the Gram matrix satisfies
//! z^H z = v (r^H r) v^H for r = phi u diag(sigma); whenever r has full
//! rank, the top eigenvectors of z^H z span exactly the row space of x.
//! The estimate therefore comes from the eigendecomposition of the N x N
//! Gram matrix, not from an SVD of z.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::GroundTruth;
use crate::sampling::CommonOperator;
use crate::C64;

/// Default relative eigenvalue threshold for rank selection on noiseless
/// data; noisy runs should pass an explicit rank.
pub const DEFAULT_EIG_RANK_TOL: f64 = 1e-8;

const ORTHO_CHECK_TOL: f64 = 1e-8;

/// Estimated orthonormal row-subspace basis with spectral diagnostics.
#[derive(Debug, Clone)]
pub struct SubspaceEstimate {
    /// N x r_used basis with orthonormal columns.
    pub q: DMatrix<C64>,
    /// Top r_used eigenvalues of z^H z, descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    pub r_used: usize,
    /// Every eigenvalue of z^H z, descending, for scree inspection.
    pub spectrum_full: Vec<f64>,
    /// Set when a requested rank exceeds the numerical rank of the Gram
    /// matrix; the extra basis vectors are then arbitrary.
    pub rank_deficient: bool,
}

/// Estimate the row subspace from common measurements z (s x N).
///
/// Forms the Hermitian Gram matrix z^H z and keeps the top eigenvectors:
/// the requested `rank` when given, otherwise every eigenvalue above
/// `rank_tol` times the largest.
pub fn estimate_row_subspace(
    z: &DMatrix<C64>,
    rank: Option<usize>,
    rank_tol: f64,
) -> Result<SubspaceEstimate> {
    if z.nrows() == 0 || z.ncols() == 0 {
        return Err(Error::InvalidDims("common measurements must be non-empty".into()));
    }
    if !linalg::is_finite_matrix(z) {
        return Err(Error::NonFinite);
    }
    let num_frames = z.ncols();
    let gram = z.adjoint() * z;
    let (mut evals, evecs) = linalg::hermitian_eigen_desc(&gram);
    // roundoff can push tiny eigenvalues of the PSD Gram matrix below zero
    for v in &mut evals {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let lmax = evals.first().copied().unwrap_or(0.0);
    let numerical_rank = if lmax > 0.0 {
        evals.iter().filter(|&&l| l > rank_tol * lmax).count()
    } else {
        0
    };
    let (r_used, rank_deficient) = match rank {
        Some(r) => {
            let r = r.min(num_frames);
            (r, r > numerical_rank)
        }
        None => (numerical_rank.max(1).min(num_frames), false),
    };
    Ok(SubspaceEstimate {
        q: evecs.columns(0, r_used).into_owned(),
        eigenvalues: evals[..r_used].to_vec(),
        r_used,
        spectrum_full: evals,
        rank_deficient,
    })
}

/// Symmetric projection error between the spans of two orthonormal bases:
///
/// `E = (|(I - v1 v1^H) v2|_F^2 + |(I - v2 v2^H) v1|_F^2) / (|v1|_F^2 + |v2|_F^2)`
///
/// using squared Frobenius norms throughout, so E = 0 for equal spans and
/// E = 1 for orthogonal ones regardless of basis choice.
pub fn projection_error(v1: &DMatrix<C64>, v2: &DMatrix<C64>) -> Result<f64> {
    if v1.nrows() != v2.nrows() {
        return Err(Error::DimMismatch(format!(
            "bases live in different spaces: {} vs {} rows",
            v1.nrows(),
            v2.nrows()
        )));
    }
    for v in [v1, v2] {
        let defect = linalg::orthonormality_defect(v);
        if defect > ORTHO_CHECK_TOL {
            return Err(Error::NotOrthonormal(defect));
        }
    }
    let res1 = v2 - v1 * (v1.adjoint() * v2);
    let res2 = v1 - v2 * (v2.adjoint() * v1);
    let denom = (v1.ncols() + v2.ncols()) as f64;
    let e = (res1.norm_squared() + res2.norm_squared()) / denom;
    Ok(e.clamp(0.0, 1.0))
}

/// Conditioning diagnostics for the mixing matrix r = phi u diag(sigma).
#[derive(Debug, Clone)]
pub struct ConditioningReport {
    pub kappa_r: f64,
    pub kappa_x: f64,
    pub kappa_phi_u: f64,
    /// sqrt((1 + delta_k) / (1 - delta_k)) * kappa_x when a restricted
    /// isometry constant is supplied.
    pub rip_bound: Option<f64>,
}

pub fn conditioning_report(
    phi: &CommonOperator,
    gt: &GroundTruth,
    delta_k: Option<f64>,
) -> Result<ConditioningReport> {
    if phi.n() != gt.x.n() {
        return Err(Error::DimMismatch(format!(
            "operator expects {} pixels, phantom has {}",
            phi.n(),
            gt.x.n()
        )));
    }
    let phi_u = phi.phi() * &gt.svd.u;
    let mut r = phi_u.clone();
    for (j, &s) in gt.svd.sigma.iter().enumerate() {
        r.column_mut(j).scale_mut(s);
    }
    let kappa_x = gt.svd.sigma[0] / gt.svd.sigma[gt.svd.sigma.len() - 1];
    let kappa_r = crate::model::condition_number(&r)?;
    let kappa_phi_u = crate::model::condition_number(&phi_u)?;
    let rip_bound = match delta_k {
        Some(d) if d < 1.0 => Some(((1.0 + d) / (1.0 - d)).sqrt() * kappa_x),
        Some(_) => Some(f64::INFINITY),
        None => None,
    };
    Ok(ConditioningReport { kappa_r, kappa_x, kappa_phi_u, rip_bound })
}
