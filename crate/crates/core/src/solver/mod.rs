//! Subspace-aware recovery of the coefficient matrix.
//!
//! Given an estimated row-subspace basis q (N x r), the per-frame
//! measurements satisfy y_i = A_i P (q^H e_i), i.e. a block linear system
//! in vec(P) whose row block i is [conj(q_i1) A_i ... conj(q_ir) A_i].
//! Three solvers share that operator: plain least squares (conjugate
//! gradient on the normal equations), per-entry TV, and joint-sparsity
//! TV with row-group shrinkage, both via ADMM with the splitting D = T P.

mod diff;
mod planar;

pub use diff::DiffOp;

use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::MatrixSignal;
use crate::sampling::PerColumnOperators;
use crate::subspace::SubspaceEstimate;
use crate::C64;
use planar::{PlanarMatrix, PlanarVec};

const DENSE_ENTRY_GUARD: usize = 10_000_000;
const INNER_CG_TOL: f64 = 1e-8;
const INNER_CG_MAX_ITERS: usize = 50;
const NORM_FLOOR: f64 = 1e-30;

/// The stacked per-frame measurement operator acting on vec(P)
/// (column-major over the n x r coefficient matrix).
pub struct BlockSystem {
    q: DMatrix<C64>,
    /// coeff[i * r + j] = conj(q[(i, j)]): the scalar multiplying A_i in
    /// row block i, column block j.
    coeff: Vec<C64>,
    planes: Vec<Arc<PlanarMatrix>>,
    frame_plane: Vec<usize>,
    n: usize,
    num_frames: usize,
    rank: usize,
    row_offsets: Vec<usize>,
    dense: OnceLock<DMatrix<C64>>,
}

impl BlockSystem {
    /// Build the system from an explicit orthonormal (or any) basis.
    pub fn from_basis(q: &DMatrix<C64>, ops: &PerColumnOperators) -> Result<Self> {
        let num_frames = ops.num_frames();
        let rank = q.ncols();
        if q.nrows() != num_frames {
            return Err(Error::DimMismatch(format!(
                "basis has {} rows for {} frames",
                q.nrows(),
                num_frames
            )));
        }
        if rank == 0 {
            return Err(Error::DimMismatch("basis must have at least one column".into()));
        }
        let n = ops.n();

        // frames in one cluster share a matrix; share the planar copy too
        let mut planes: Vec<Arc<PlanarMatrix>> = Vec::new();
        let mut plane_keys: Vec<*const DMatrix<C64>> = Vec::new();
        let mut frame_plane = Vec::with_capacity(num_frames);
        for i in 0..num_frames {
            let key = Arc::as_ptr(ops.op_arc(i));
            let idx = match plane_keys.iter().position(|&k| k == key) {
                Some(idx) => idx,
                None => {
                    plane_keys.push(key);
                    planes.push(Arc::new(PlanarMatrix::from_dense(ops.op(i))));
                    planes.len() - 1
                }
            };
            frame_plane.push(idx);
        }

        let mut coeff = Vec::with_capacity(num_frames * rank);
        for i in 0..num_frames {
            for j in 0..rank {
                coeff.push(q[(i, j)].conj());
            }
        }
        let mut row_offsets = Vec::with_capacity(num_frames + 1);
        let mut at = 0usize;
        for i in 0..num_frames {
            row_offsets.push(at);
            at += ops.op(i).nrows();
        }
        row_offsets.push(at);

        Ok(Self {
            q: q.clone(),
            coeff,
            planes,
            frame_plane,
            n,
            num_frames,
            rank,
            row_offsets,
            dense: OnceLock::new(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn total_rows(&self) -> usize {
        *self.row_offsets.last().expect("offsets non-empty")
    }

    pub fn q(&self) -> &DMatrix<C64> {
        &self.q
    }

    fn frame_op(&self, i: usize) -> &PlanarMatrix {
        &self.planes[self.frame_plane[i]]
    }

    /// Forward apply on planar storage: out (total_rows) = B x (n * r).
    fn apply_planar(&self, x: &PlanarVec, out: &mut PlanarVec, work: &mut Workspace) {
        let (n, r) = (self.n, self.rank);
        for i in 0..self.num_frames {
            let op = self.frame_op(i);
            if op.rows == 0 {
                continue;
            }
            // w = sum_j coeff[i,j] * p_j
            work.w.fill_zero();
            for j in 0..r {
                let c = self.coeff[i * r + j];
                if c.re == 0.0 && c.im == 0.0 {
                    continue;
                }
                let pr = &x.re[j * n..(j + 1) * n];
                let pi = &x.im[j * n..(j + 1) * n];
                for (((wr, wi), xr), xi) in
                    work.w.re.iter_mut().zip(work.w.im.iter_mut()).zip(pr).zip(pi)
                {
                    *wr += c.re * xr - c.im * xi;
                    *wi += c.re * xi + c.im * xr;
                }
            }
            let lo = self.row_offsets[i];
            let hi = self.row_offsets[i + 1];
            op.gemv(&work.w.re, &work.w.im, &mut out.re[lo..hi], &mut out.im[lo..hi]);
        }
    }

    /// Adjoint apply on planar storage: out (n * r) = B^H v (total_rows).
    fn adjoint_planar(&self, v: &PlanarVec, out: &mut PlanarVec, work: &mut Workspace) {
        let (n, r) = (self.n, self.rank);
        out.fill_zero();
        for i in 0..self.num_frames {
            let op = self.frame_op(i);
            if op.rows == 0 {
                continue;
            }
            let lo = self.row_offsets[i];
            let hi = self.row_offsets[i + 1];
            op.gemv_adjoint(&v.re[lo..hi], &v.im[lo..hi], &mut work.g.re, &mut work.g.im);
            for j in 0..r {
                // conj(coeff) = q[(i, j)]
                let c = self.coeff[i * r + j];
                if c.re == 0.0 && c.im == 0.0 {
                    continue;
                }
                let or = &mut out.re[j * n..(j + 1) * n];
                let oi = &mut out.im[j * n..(j + 1) * n];
                for (((o_r, o_i), gr), gi) in
                    or.iter_mut().zip(oi.iter_mut()).zip(&work.g.re).zip(&work.g.im)
                {
                    *o_r += c.re * gr + c.im * gi;
                    *o_i += c.re * gi - c.im * gr;
                }
            }
        }
    }

    /// Forward apply for callers holding interleaved complex data.
    pub fn apply_vec(&self, p: &[C64]) -> Result<Vec<C64>> {
        if p.len() != self.n * self.rank {
            return Err(Error::DimMismatch(format!(
                "vec(P) has {} entries, expected {}",
                p.len(),
                self.n * self.rank
            )));
        }
        let x = PlanarVec::from_complex(p);
        let mut out = PlanarVec::zeros(self.total_rows());
        let mut work = Workspace::new(self.n);
        self.apply_planar(&x, &mut out, &mut work);
        Ok(out.to_complex())
    }

    /// Adjoint apply for callers holding interleaved complex data.
    pub fn adjoint_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.total_rows() {
            return Err(Error::DimMismatch(format!(
                "stacked measurements have {} entries, expected {}",
                v.len(),
                self.total_rows()
            )));
        }
        let vv = PlanarVec::from_complex(v);
        let mut out = PlanarVec::zeros(self.n * self.rank);
        let mut work = Workspace::new(self.n);
        self.adjoint_planar(&vv, &mut out, &mut work);
        Ok(out.to_complex())
    }

    /// Explicit dense matrix, materialized lazily; refused above 1e7 entries.
    pub fn dense(&self) -> Result<&DMatrix<C64>> {
        let entries = self.total_rows() * self.n * self.rank;
        if entries > DENSE_ENTRY_GUARD {
            return Err(Error::TooLarge(format!("dense block matrix would hold {entries} entries")));
        }
        Ok(self.dense.get_or_init(|| {
            let mut b = DMatrix::<C64>::zeros(self.total_rows(), self.n * self.rank);
            for i in 0..self.num_frames {
                let lo = self.row_offsets[i];
                let rows = self.row_offsets[i + 1] - lo;
                if rows == 0 {
                    continue;
                }
                for j in 0..self.rank {
                    let c = self.coeff[i * self.rank + j];
                    let op = self.frame_op(i);
                    for col in 0..self.n {
                        for row in 0..rows {
                            let a = self.op_entry(op, row, col);
                            b[(lo + row, j * self.n + col)] = c * a;
                        }
                    }
                }
            }
            b
        }))
    }

    fn op_entry(&self, op: &PlanarMatrix, row: usize, col: usize) -> C64 {
        let (re, im) = op.entry(row, col);
        C64::new(re, im)
    }

    /// Normal-equation operator out = (B^H B + rho T^H T) x.
    fn normal_apply(
        &self,
        tv: Option<(&DiffOp, f64)>,
        x: &PlanarVec,
        out: &mut PlanarVec,
        meas: &mut PlanarVec,
        work: &mut Workspace,
    ) {
        self.apply_planar(x, meas, work);
        self.adjoint_planar(meas, out, work);
        if let Some((diff, rho)) = tv {
            let (n, rows_t) = (self.n, diff.rows_out());
            for j in 0..self.rank {
                for (plane_in, plane_out) in [(&x.re, &mut out.re), (&x.im, &mut out.im)] {
                    let col = &plane_in[j * n..(j + 1) * n];
                    diff.apply_plane(col, &mut work.t_col[..rows_t]);
                    diff.adjoint_plane(&work.t_col[..rows_t], &mut work.n_col[..n]);
                    for (o, v) in plane_out[j * n..(j + 1) * n].iter_mut().zip(&work.n_col[..n]) {
                        *o += rho * v;
                    }
                }
            }
        }
    }
}

/// Scratch buffers reused across applies.
struct Workspace {
    w: PlanarVec,
    g: PlanarVec,
    t_col: Vec<f64>,
    n_col: Vec<f64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        Self {
            w: PlanarVec::zeros(n),
            g: PlanarVec::zeros(n),
            t_col: vec![0.0; 2 * n],
            n_col: vec![0.0; n],
        }
    }
}

/// Build the block system from a subspace estimate.
pub fn build_block_system(
    est: &SubspaceEstimate,
    ops: &PerColumnOperators,
) -> Result<BlockSystem> {
    BlockSystem::from_basis(&est.q, ops)
}

/// ADMM controls. `lambda` weighs the TV penalty against the residual
/// term of measurements normalized to unit Frobenius norm.
#[derive(Debug, Clone)]
pub struct AdmmParams {
    pub lambda: f64,
    pub rho: f64,
    pub max_iters: usize,
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub over_relaxation: f64,
}

impl Default for AdmmParams {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            rho: 1.0,
            max_iters: 500,
            primal_tol: 1e-6,
            dual_tol: 1e-6,
            over_relaxation: 1.0,
        }
    }
}

impl AdmmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidParams("lambda must be finite and >= 0".into()));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidParams("rho must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParams("max_iters must be positive".into()));
        }
        for (name, t) in [("primal_tol", self.primal_tol), ("dual_tol", self.dual_tol)] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::InvalidParams(format!("{name} must lie in (0, 1)")));
            }
        }
        if !(1.0..=1.8).contains(&self.over_relaxation) {
            return Err(Error::InvalidParams("over_relaxation must lie in [1, 1.8]".into()));
        }
        Ok(())
    }
}

/// Solver output: coefficients, reconstruction, and convergence record.
#[derive(Debug, Clone)]
pub struct RecoveryResult {
    pub p: DMatrix<C64>,
    /// p * q^H, by construction.
    pub x_hat: DMatrix<C64>,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

fn planar_to_matrix(x: &PlanarVec, n: usize, r: usize) -> DMatrix<C64> {
    DMatrix::from_fn(n, r, |i, j| C64::new(x.re[j * n + i], x.im[j * n + i]))
}

fn finish(sys: &BlockSystem, p_planar: &PlanarVec, iterations: usize, history: Vec<f64>, converged: bool) -> RecoveryResult {
    let p = planar_to_matrix(p_planar, sys.n(), sys.rank());
    let x_hat = &p * sys.q().adjoint();
    RecoveryResult { p, x_hat, iterations, residual_history: history, converged }
}

/// Conjugate gradient on (B^H B + rho T^H T) x = b, warm-started at `x`.
/// Returns (iterations, relative recurrence residual).
fn cg_normal(
    sys: &BlockSystem,
    tv: Option<(&DiffOp, f64)>,
    b: &PlanarVec,
    x: &mut PlanarVec,
    tol: f64,
    max_iters: usize,
    history: Option<&mut Vec<f64>>,
) -> (usize, f64) {
    let dim = b.len();
    let mut meas = PlanarVec::zeros(sys.total_rows());
    let mut work = Workspace::new(sys.n());
    let mut r = PlanarVec::zeros(dim);
    let mut ax = PlanarVec::zeros(dim);
    sys.normal_apply(tv, x, &mut ax, &mut meas, &mut work);
    r.copy_from(b);
    r.axpy(-1.0, &ax);
    let b_norm = b.norm().max(NORM_FLOOR);
    let mut p = r.clone();
    let mut rs = r.norm_sqr();
    let mut np = PlanarVec::zeros(dim);
    let mut iters = 0usize;
    let mut hist = history;
    while iters < max_iters && rs.sqrt() > tol * b_norm {
        sys.normal_apply(tv, &p, &mut np, &mut meas, &mut work);
        let pnp = p.dot_re(&np);
        if !(pnp > 0.0) {
            break; // operator is PSD; zero curvature means we are done
        }
        let alpha = rs / pnp;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &np);
        let rs_new = r.norm_sqr();
        p.xpby(&r, rs_new / rs);
        rs = rs_new;
        iters += 1;
        if let Some(h) = hist.as_deref_mut() {
            h.push(rs.sqrt() / b_norm);
        }
    }
    (iters, rs.sqrt() / b_norm)
}

/// Minimize |B vec(P) - y|_2 by conjugate gradient on the normal
/// equations. Converged when the relative normal-equation residual
/// |B^H (y - B p)| / |B^H y| drops to `tol`; a result is returned either
/// way, flagged through `converged`.
pub fn solve_least_squares(
    sys: &BlockSystem,
    y: &[C64],
    tol: f64,
    max_iters: usize,
) -> Result<RecoveryResult> {
    if y.len() != sys.total_rows() {
        return Err(Error::DimMismatch(format!(
            "got {} stacked measurements, system produces {}",
            y.len(),
            sys.total_rows()
        )));
    }
    if !(tol > 0.0 && tol < 1.0) || max_iters == 0 {
        return Err(Error::InvalidParams("need 0 < tol < 1 and max_iters >= 1".into()));
    }
    let yv = PlanarVec::from_complex(y);
    let mut b = PlanarVec::zeros(sys.n() * sys.rank());
    let mut work = Workspace::new(sys.n());
    sys.adjoint_planar(&yv, &mut b, &mut work);

    let mut x = PlanarVec::zeros(sys.n() * sys.rank());
    let mut history = Vec::new();
    let (iters, _) = cg_normal(sys, None, &b, &mut x, tol, max_iters, Some(&mut history));

    // true residual, not the recurrence estimate
    let mut meas = PlanarVec::zeros(sys.total_rows());
    let mut ax = PlanarVec::zeros(b.len());
    sys.normal_apply(None, &x, &mut ax, &mut meas, &mut work);
    ax.axpy(-1.0, &b);
    let rel = ax.norm() / b.norm().max(NORM_FLOOR);
    Ok(finish(sys, &x, iters, history, rel <= tol))
}

/// Magnitude soft-thresholding, phase preserved.
pub fn prox_magnitude(c: C64, tau: f64) -> C64 {
    let m = c.norm();
    if m <= tau || m == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        c * ((m - tau) / m)
    }
}

/// Group shrinkage of one gradient row across the r coefficient columns:
/// g * max(0, 1 - tau / |g|_2).
pub fn prox_row_l2(row: &[C64], tau: f64) -> Vec<C64> {
    let norm = row.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let factor = if norm > tau { 1.0 - tau / norm } else { 0.0 };
    row.iter().map(|&c| c * factor).collect()
}

enum Shrinkage {
    RowGroups,
    PerEntry,
}

fn shrink(d: &mut PlanarVec, rows_t: usize, r: usize, tau: f64, mode: &Shrinkage) {
    match mode {
        Shrinkage::RowGroups => {
            for g in 0..rows_t {
                let mut norm_sq = 0.0;
                for j in 0..r {
                    let idx = j * rows_t + g;
                    norm_sq += d.re[idx] * d.re[idx] + d.im[idx] * d.im[idx];
                }
                let norm = norm_sq.sqrt();
                let factor = if norm > tau { 1.0 - tau / norm } else { 0.0 };
                for j in 0..r {
                    let idx = j * rows_t + g;
                    d.re[idx] *= factor;
                    d.im[idx] *= factor;
                }
            }
        }
        Shrinkage::PerEntry => {
            for idx in 0..d.len() {
                let m = (d.re[idx] * d.re[idx] + d.im[idx] * d.im[idx]).sqrt();
                let factor = if m > tau { 1.0 - tau / m } else { 0.0 };
                d.re[idx] *= factor;
                d.im[idx] *= factor;
            }
        }
    }
}

fn apply_diff_all(diff: &DiffOp, x: &PlanarVec, n: usize, r: usize, out: &mut PlanarVec) {
    let rows_t = diff.rows_out();
    for j in 0..r {
        diff.apply_plane(&x.re[j * n..(j + 1) * n], &mut out.re[j * rows_t..(j + 1) * rows_t]);
        diff.apply_plane(&x.im[j * n..(j + 1) * n], &mut out.im[j * rows_t..(j + 1) * rows_t]);
    }
}

fn adjoint_diff_all(diff: &DiffOp, v: &PlanarVec, n: usize, r: usize, out: &mut PlanarVec) {
    let rows_t = diff.rows_out();
    for j in 0..r {
        diff.adjoint_plane(&v.re[j * rows_t..(j + 1) * rows_t], &mut out.re[j * n..(j + 1) * n]);
        diff.adjoint_plane(&v.im[j * rows_t..(j + 1) * rows_t], &mut out.im[j * n..(j + 1) * n]);
    }
}

fn solve_admm(
    sys: &BlockSystem,
    y: &[C64],
    params: &AdmmParams,
    diff: DiffOp,
    mode: Shrinkage,
) -> Result<RecoveryResult> {
    params.validate()?;
    if y.len() != sys.total_rows() {
        return Err(Error::DimMismatch(format!(
            "got {} stacked measurements, system produces {}",
            y.len(),
            sys.total_rows()
        )));
    }
    let (n, r) = (sys.n(), sys.rank());
    debug_assert_eq!(diff.n(), n);
    let rows_t = diff.rows_out();
    let dim_p = n * r;
    let dim_t = rows_t * r;

    // normalize measurements so lambda and rho are scale-free
    let mut yv = PlanarVec::from_complex(y);
    let scale = yv.norm();
    if scale <= NORM_FLOOR {
        let p = PlanarVec::zeros(dim_p);
        return Ok(finish(sys, &p, 0, Vec::new(), true));
    }
    yv.scale(1.0 / scale);

    let mut work = Workspace::new(n);
    let mut b0 = PlanarVec::zeros(dim_p);
    sys.adjoint_planar(&yv, &mut b0, &mut work);

    let rho = params.rho;
    let tau = params.lambda / rho;
    let alpha = params.over_relaxation;

    let mut p = PlanarVec::zeros(dim_p);
    let mut d = PlanarVec::zeros(dim_t);
    let mut u = PlanarVec::zeros(dim_t);
    let mut t = PlanarVec::zeros(dim_t);
    let mut rhs = PlanarVec::zeros(dim_p);
    let mut tmp_t = PlanarVec::zeros(dim_t);
    let mut tmp_p = PlanarVec::zeros(dim_p);
    let mut d_old = PlanarVec::zeros(dim_t);

    let mut history = Vec::with_capacity(params.max_iters);
    let mut converged = false;
    let mut iterations = 0usize;

    for _ in 0..params.max_iters {
        iterations += 1;

        // p-update: (B^H B + rho T^H T) p = b0 + rho T^H (d - u)
        tmp_t.copy_from(&d);
        tmp_t.axpy(-1.0, &u);
        adjoint_diff_all(&diff, &tmp_t, n, r, &mut tmp_p);
        rhs.copy_from(&b0);
        rhs.axpy(rho, &tmp_p);
        cg_normal(sys, Some((&diff, rho)), &rhs, &mut p, INNER_CG_TOL, INNER_CG_MAX_ITERS, None);

        apply_diff_all(&diff, &p, n, r, &mut t);

        // relaxed gradient iterate
        d_old.copy_from(&d);
        tmp_t.copy_from(&t);
        tmp_t.scale(alpha);
        tmp_t.axpy(1.0 - alpha, &d_old);

        // d-update: shrink(relaxed + u)
        d.copy_from(&tmp_t);
        d.axpy(1.0, &u);
        shrink(&mut d, rows_t, r, tau, &mode);

        // dual ascent
        u.axpy(1.0, &tmp_t);
        u.axpy(-1.0, &d);

        // residuals
        tmp_t.copy_from(&t);
        tmp_t.axpy(-1.0, &d);
        let r_pri = tmp_t.norm();
        tmp_t.copy_from(&d);
        tmp_t.axpy(-1.0, &d_old);
        adjoint_diff_all(&diff, &tmp_t, n, r, &mut tmp_p);
        let r_dual = rho * tmp_p.norm();

        let denom_pri = t.norm().max(d.norm()).max(NORM_FLOOR);
        adjoint_diff_all(&diff, &u, n, r, &mut tmp_p);
        let denom_dual = (rho * tmp_p.norm()).max(NORM_FLOOR);

        history.push(r_pri / denom_pri);
        if r_pri <= params.primal_tol * denom_pri && r_dual <= params.dual_tol * denom_dual {
            converged = true;
            break;
        }
    }

    p.scale(scale);
    Ok(finish(sys, &p, iterations, history, converged))
}

/// Joint-sparsity TV: minimizes `|B vec(P) - y|^2 + lambda |T P|_{l1,l2}`
/// where the l1-l2 mixed norm groups each gradient position across the r
/// coefficient columns. 2-D gradients when `image_side` is given.
pub fn solve_joint_sparse_tv(
    sys: &BlockSystem,
    y: &[C64],
    params: &AdmmParams,
    image_side: Option<usize>,
) -> Result<RecoveryResult> {
    let diff = DiffOp::for_signal(sys.n(), image_side)?;
    solve_admm(sys, y, params, diff, Shrinkage::RowGroups)
}

/// Per-entry TV baseline: same ADMM, scalar magnitude shrinkage on every
/// gradient entry (no grouping across coefficient columns).
pub fn solve_tv(
    sys: &BlockSystem,
    y: &[C64],
    params: &AdmmParams,
    image_side: Option<usize>,
) -> Result<RecoveryResult> {
    let diff = DiffOp::for_signal(sys.n(), image_side)?;
    solve_admm(sys, y, params, diff, Shrinkage::PerEntry)
}

/// Exact least squares restricted to the coefficient rows in `support`
/// (zero elsewhere), via the pseudoinverse of the restricted dense system.
pub fn solve_least_squares_on_support(
    sys: &BlockSystem,
    y: &[C64],
    support: &[usize],
) -> Result<RecoveryResult> {
    if y.len() != sys.total_rows() {
        return Err(Error::DimMismatch("measurement length mismatch".into()));
    }
    let (n, r) = (sys.n(), sys.rank());
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
    let rhs = nalgebra::DVector::from_column_slice(y);

    let (us, sv, vs) = crate::linalg::svd_thin(&restricted)?;
    let smax = sv.max();
    let uy = us.adjoint() * &rhs;
    let mut coeffs = nalgebra::DVector::<C64>::zeros(sv.len());
    for i in 0..sv.len() {
        if sv[i] > 1e-12 * smax {
            coeffs[i] = uy[i] / C64::new(sv[i], 0.0);
        }
    }
    let sol = vs * coeffs;

    let mut p = DMatrix::<C64>::zeros(n, r);
    for (idx, &col) in cols.iter().enumerate() {
        p[(col % n, col / n)] = sol[idx];
    }
    let x_hat = &p * sys.q().adjoint();
    let residual = (&restricted * sol - rhs).norm() / rhs.norm().max(NORM_FLOOR);
    Ok(RecoveryResult { p, x_hat, iterations: 1, residual_history: vec![residual], converged: true })
}

/// x_hat = p q^H.
pub fn reconstruct(p: &DMatrix<C64>, q: &DMatrix<C64>) -> Result<MatrixSignal> {
    if p.ncols() != q.ncols() {
        return Err(Error::DimMismatch(format!(
            "p has {} coefficient columns, q has {}",
            p.ncols(),
            q.ncols()
        )));
    }
    MatrixSignal::new(p * q.adjoint())
}

/// Normalized recovery error |x_hat - x_true|_F / |x_true|_F.
pub fn recovery_error(x_hat: &DMatrix<C64>, x_true: &DMatrix<C64>) -> Result<f64> {
    if x_hat.shape() != x_true.shape() {
        return Err(Error::DimMismatch(format!(
            "shapes {:?} vs {:?}",
            x_hat.shape(),
            x_true.shape()
        )));
    }
    let denom = x_true.norm();
    if denom == 0.0 {
        return Err(Error::ZeroMatrix);
    }
    Ok((x_hat - x_true).norm() / denom)
}
