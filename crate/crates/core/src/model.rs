//! Core domain types: the image-series matrix, its skinny SVD, and a
//! synthetic phantom generator with controllable size, rank and joint
//! (row) sparsity.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;
use crate::verify;
use crate::C64;

/// Default relative threshold separating true singular values from
/// double-precision SVD noise at the problem sizes handled here.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

const SPARK_BRUTEFORCE_MAX_COLS: usize = 20;
const SPARK_RANDOM_SUBSETS: usize = 50;

/// Complex n x N matrix; columns are frames, rows are per-pixel
/// temporal profiles. Entries are validated finite on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixSignal {
    data: DMatrix<C64>,
}

impl MatrixSignal {
    pub fn new(data: DMatrix<C64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidDims("matrix must be non-empty".into()));
        }
        if !linalg::is_finite_matrix(&data) {
            return Err(Error::NonFinite);
        }
        Ok(Self { data })
    }

    /// Rows (pixels per frame).
    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    /// Columns (frames).
    pub fn num_frames(&self) -> usize {
        self.data.ncols()
    }

    pub fn data(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.data
    }
}

/// Rank-r factorization `x = u * diag(sigma) * v^H` with orthonormal
/// `u` (n x r) and `v` (N x r), sigma positive descending.
#[derive(Debug, Clone)]
pub struct SkinnySVD {
    pub u: DMatrix<C64>,
    pub sigma: Vec<f64>,
    pub v: DMatrix<C64>,
}

impl SkinnySVD {
    pub fn rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn reconstruct(&self) -> DMatrix<C64> {
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            self.sigma.len(),
            self.sigma.iter().map(|&s| C64::new(s, 0.0)),
        ));
        &self.u * d * self.v.adjoint()
    }
}

/// Where the k support rows of a phantom are placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SupportLayout {
    /// k rows drawn uniformly at random.
    #[default]
    RandomRows,
    /// k consecutive pixels forming a centered horizontal band
    /// (requires `image_side`).
    ImageBand,
}

/// Parameters for synthetic phantom generation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PhantomSpec {
    /// Pixels per frame.
    pub n: usize,
    /// Number of frames (columns).
    pub num_frames: usize,
    /// Target rank r.
    pub rank: usize,
    /// Target joint sparsity k (number of nonzero rows), k >= r.
    pub sparsity: usize,
    pub seed: u64,
    /// When set, `image_side^2` must equal `n` (2-D gradients, radial sampling).
    pub image_side: Option<usize>,
    /// Noise level a downstream measurement stage may apply; unused here.
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub support_layout: SupportLayout,
}

impl PhantomSpec {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 || self.sparsity == 0 || self.n == 0 || self.num_frames == 0 {
            return Err(Error::InvalidSpec("all dimensions must be positive".into()));
        }
        if self.rank > self.sparsity.min(self.num_frames) {
            return Err(Error::InvalidSpec(format!(
                "rank {} must not exceed min(sparsity {}, frames {})",
                self.rank, self.sparsity, self.num_frames
            )));
        }
        if self.sparsity > self.n {
            return Err(Error::InvalidSpec(format!(
                "sparsity {} exceeds {} rows",
                self.sparsity, self.n
            )));
        }
        if let Some(side) = self.image_side {
            if side * side != self.n {
                return Err(Error::InvalidImageSide { side, n: self.n });
            }
        }
        if self.support_layout == SupportLayout::ImageBand && self.image_side.is_none() {
            return Err(Error::InvalidSpec("band support requires image_side".into()));
        }
        Ok(())
    }
}

/// A generated phantom together with its exact factors and support.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    pub x: MatrixSignal,
    pub svd: SkinnySVD,
    /// Sorted indices of the k nonzero rows.
    pub support: Vec<usize>,
    pub rank: usize,
    pub sparsity: usize,
}

fn pick_support(spec: &PhantomSpec, rng: &mut impl Rng) -> Vec<usize> {
    match spec.support_layout {
        SupportLayout::RandomRows => {
            let mut idx = rand::seq::index::sample(rng, spec.n, spec.sparsity).into_vec();
            idx.sort_unstable();
            idx
        }
        SupportLayout::ImageBand => {
            let side = spec.image_side.expect("validated");
            let band_rows = spec.sparsity.div_ceil(side);
            let first_row = (side.saturating_sub(band_rows)) / 2;
            let start = first_row * side;
            (start..start + spec.sparsity).collect()
        }
    }
}

/// Generate a k-jointly-sparse rank-r phantom `x = u * diag(sigma) * v^H`.
///
/// The left factor is complex Gaussian on the support rows (exactly zero
/// elsewhere) and orthonormalized, the right factor is a random orthonormal
/// basis, and the singular values are log-uniform in [1, 10]. Generic
/// factors make every set of r columns independent almost surely; the
/// construction verifies that, exhaustively when the matrix has at most
/// 20 columns and by randomized r-column rank checks otherwise.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<GroundTruth> {
    spec.validate()?;
    let (n, num_frames, r, k) = (spec.n, spec.num_frames, spec.rank, spec.sparsity);
    let mut rng = rng::stream(spec.seed, 0x5048_414E);

    let support = pick_support(spec, &mut rng);

    // Left factor: Gaussian on the support, orthonormalized there, zero off it.
    let dense_block = linalg::complex_gaussian(k, r, &mut rng);
    let q_block = linalg::orthonormalize_columns(&dense_block);
    let mut u = DMatrix::<C64>::zeros(n, r);
    for (bi, &row) in support.iter().enumerate() {
        for j in 0..r {
            u[(row, j)] = q_block[(bi, j)];
        }
    }

    let v = linalg::random_orthonormal(num_frames, r, &mut rng);

    let mut sigma: Vec<f64> = (0..r).map(|_| 10.0f64.powf(rng.gen::<f64>())).collect();
    sigma.sort_by(|a, b| b.total_cmp(a));

    let mut scaled_u = u.clone();
    for (j, &s) in sigma.iter().enumerate() {
        scaled_u.column_mut(j).scale_mut(s);
    }
    let x = &scaled_u * v.adjoint();

    verify_spark_condition(&x, r, &mut rng)?;

    Ok(GroundTruth {
        x: MatrixSignal::new(x)?,
        svd: SkinnySVD { u, sigma, v },
        support,
        rank: r,
        sparsity: k,
    })
}

/// Confirm every r columns of `x` are independent, i.e. spark(x) = r + 1
/// given rank(x) = r.
fn verify_spark_condition(x: &DMatrix<C64>, r: usize, rng: &mut impl Rng) -> Result<()> {
    let cols = x.ncols();
    if cols <= SPARK_BRUTEFORCE_MAX_COLS {
        let res = verify::spark_bruteforce(x, r.min(cols))?;
        if res.witness.is_some() {
            return Err(Error::Numerical(format!(
                "generated phantom has a dependent column set of size {}",
                res.spark
            )));
        }
        return Ok(());
    }
    for _ in 0..SPARK_RANDOM_SUBSETS {
        let idx = rand::seq::index::sample(rng, cols, r).into_vec();
        let sub = x.select_columns(idx.iter());
        let sv = linalg::singular_values(&sub);
        if sv[sv.len() - 1] <= 1e-10 * sv[0] {
            return Err(Error::Numerical(
                "generated phantom failed a random r-column rank check".into(),
            ));
        }
    }
    Ok(())
}

/// Rank-revealing thin SVD; keeps singular values above `rank_tol * sigma_1`.
pub fn skinny_svd(x: &MatrixSignal, rank_tol: f64) -> Result<SkinnySVD> {
    let (u, s, v) = linalg::svd_thin(x.data())?;
    let s1 = s.max();
    if s1 <= f64::MIN_POSITIVE {
        return Err(Error::ZeroMatrix);
    }
    let r = s.iter().filter(|&&sv| sv > rank_tol * s1).count();
    if r == 0 {
        return Err(Error::ZeroMatrix);
    }
    Ok(SkinnySVD {
        u: u.columns(0, r).into_owned(),
        sigma: s.iter().take(r).copied().collect(),
        v: v.columns(0, r).into_owned(),
    })
}

/// Indices of rows whose Euclidean norm exceeds `tol` times the largest
/// row norm; empty for the zero matrix.
pub fn joint_support(x: &MatrixSignal, tol: f64) -> Vec<usize> {
    let norms: Vec<f64> = (0..x.n()).map(|i| x.data().row(i).norm()).collect();
    let max = norms.iter().cloned().fold(0.0f64, f64::max);
    if max == 0.0 {
        return Vec::new();
    }
    norms
        .iter()
        .enumerate()
        .filter(|(_, &nm)| nm > tol * max)
        .map(|(i, _)| i)
        .collect()
}

/// sigma_max / sigma_min; infinity when rank-deficient relative to the
/// smallest dimension (sigma_min < 1e-14 sigma_max).
pub fn condition_number(m: &DMatrix<C64>) -> Result<f64> {
    if m.iter().all(|c| c.re == 0.0 && c.im == 0.0) {
        return Err(Error::ZeroMatrix);
    }
    let sv = linalg::singular_values(m);
    Ok(linalg::condition_from_singvals(sv.as_slice()))
}
