//! Measurement operators and their application: a common operator shared
//! by every frame, per-frame operators (dense Gaussian or radial-Fourier
//! lines, possibly clustered so groups of frames share one matrix), and
//! SNR-calibrated complex Gaussian noise.
//!
//! Radial rows are exact nonuniform DFT functionals evaluated by direct
//! summation over the pixel grid; no gridding or NUFFT approximation, so
//! operator values are bit-reproducible.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::MatrixSignal;
use crate::rng;
use crate::C64;

/// Angle advance between successive radial spokes, in degrees.
pub const GOLDEN_ANGLE_DEG: f64 = 111.246;

/// k-space points closer than this are treated as duplicates.
const KPOINT_DEDUP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Gaussian,
    RadialFourier,
}

/// One radial line and the k-space points of it that were kept.
#[derive(Debug, Clone)]
pub struct RadialLine {
    pub angle: f64,
    pub points: Vec<[f64; 2]>,
}

/// The s x n operator applied identically to every frame.
#[derive(Debug, Clone)]
pub struct CommonOperator {
    phi: DMatrix<C64>,
    kind: OperatorKind,
    lines: Option<Vec<RadialLine>>,
}

impl CommonOperator {
    /// Wrap an explicit matrix as a common operator.
    pub fn from_matrix(phi: DMatrix<C64>, kind: OperatorKind) -> Result<Self> {
        if phi.nrows() == 0 || phi.ncols() == 0 {
            return Err(Error::InvalidDims("operator must be non-empty".into()));
        }
        if !linalg::is_finite_matrix(&phi) {
            return Err(Error::NonFinite);
        }
        Ok(Self { phi, kind, lines: None })
    }

    pub fn s(&self) -> usize {
        self.phi.nrows()
    }

    pub fn n(&self) -> usize {
        self.phi.ncols()
    }

    pub fn phi(&self) -> &DMatrix<C64> {
        &self.phi
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    /// Radial metadata: the lines and sample positions actually used.
    pub fn lines(&self) -> Option<&[RadialLine]> {
        self.lines.as_deref()
    }

    /// All k-space points of a radial operator, flattened.
    pub fn k_points(&self) -> Vec<[f64; 2]> {
        self.lines
            .iter()
            .flatten()
            .flat_map(|l| l.points.iter().copied())
            .collect()
    }
}

/// Dense i.i.d. complex Gaussian operator with unit complex entry variance.
pub fn gaussian_operator(s: usize, n: usize, seed: u64) -> Result<CommonOperator> {
    if s == 0 || n == 0 || s > n {
        return Err(Error::InvalidDims(format!("need 1 <= s <= n, got s={s} n={n}")));
    }
    let mut rng = rng::stream(seed, 0x4741_5553);
    Ok(CommonOperator {
        phi: linalg::complex_gaussian(s, n, &mut rng),
        kind: OperatorKind::Gaussian,
        lines: None,
    })
}

/// Fourier functional at (kx, ky): row entries exp(-i (kx x + ky y))
/// over the pixel grid, pixel p = y * side + x.
fn nudft_row(kx: f64, ky: f64, side: usize) -> DVector<C64> {
    let n = side * side;
    DVector::from_fn(n, |p, _| {
        let x = (p % side) as f64;
        let y = (p / side) as f64;
        let phase = -(kx * x + ky * y);
        C64::new(phase.cos(), phase.sin())
    })
}

fn is_duplicate(pt: [f64; 2], kept: &[[f64; 2]]) -> bool {
    kept.iter().any(|q| {
        let dx = q[0] - pt[0];
        let dy = q[1] - pt[1];
        (dx * dx + dy * dy).sqrt() < KPOINT_DEDUP_TOL
    })
}

/// Build radial lines at the given angles: `samples_per_line` points
/// equispaced along each line through the k-space origin, spacing
/// 2 pi / samples_per_line, covering [-pi, pi). Points already in
/// `exclude` or duplicated across lines (the shared origin) are dropped.
fn radial_lines(
    angles: &[f64],
    samples_per_line: usize,
    exclude: &[[f64; 2]],
) -> Vec<RadialLine> {
    let m = samples_per_line;
    let dk = 2.0 * PI / m as f64;
    let mut kept: Vec<[f64; 2]> = exclude.to_vec();
    let mut lines = Vec::with_capacity(angles.len());
    for &angle in angles {
        let (sin_a, cos_a) = angle.sin_cos();
        let mut points = Vec::with_capacity(m);
        for t in 0..m {
            let rho = (t as f64 - (m / 2) as f64) * dk;
            let pt = [rho * cos_a, rho * sin_a];
            if !is_duplicate(pt, &kept) {
                kept.push(pt);
                points.push(pt);
            }
        }
        lines.push(RadialLine { angle, points });
    }
    lines
}

fn operator_from_lines(lines: Vec<RadialLine>, side: usize) -> CommonOperator {
    let n = side * side;
    let rows: Vec<DVector<C64>> = lines
        .iter()
        .flat_map(|l| l.points.iter().map(|&[kx, ky]| nudft_row(kx, ky, side)))
        .collect();
    let s = rows.len();
    let mut phi = DMatrix::<C64>::zeros(s, n);
    for (i, row) in rows.iter().enumerate() {
        phi.row_mut(i).copy_from(&row.transpose());
    }
    CommonOperator { phi, kind: OperatorKind::RadialFourier, lines: Some(lines) }
}

/// Radial-Fourier operator: `num_lines` lines at angles
/// `angle_offset + pi l / num_lines`, each with `samples_per_line`
/// equispaced samples; duplicate k-points (line crossings at the origin)
/// are deduplicated, so `s <= num_lines * samples_per_line`.
pub fn radial_fourier_operator(
    num_lines: usize,
    samples_per_line: usize,
    image_side: usize,
    angle_offset: f64,
) -> Result<CommonOperator> {
    if image_side < 2 || num_lines == 0 || samples_per_line == 0 {
        return Err(Error::InvalidDims(format!(
            "radial operator needs image_side >= 2 and at least one line/sample, \
             got lines={num_lines} samples={samples_per_line} side={image_side}"
        )));
    }
    let angles: Vec<f64> =
        (0..num_lines).map(|l| angle_offset + PI * l as f64 / num_lines as f64).collect();
    Ok(operator_from_lines(radial_lines(&angles, samples_per_line, &[]), image_side))
}

/// Radial operator with an exact total point budget: lines are added one
/// golden-angle step at a time and their deduplicated points accumulated
/// until `num_points` rows exist.
pub fn radial_fourier_points(
    num_points: usize,
    samples_per_line: usize,
    image_side: usize,
    angle_offset: f64,
) -> Result<CommonOperator> {
    if image_side < 2 || num_points == 0 || samples_per_line == 0 {
        return Err(Error::InvalidDims("need a positive point budget on a real grid".into()));
    }
    let ga = GOLDEN_ANGLE_DEG.to_radians();
    let mut lines: Vec<RadialLine> = Vec::new();
    let mut total = 0usize;
    let mut l = 0usize;
    while total < num_points {
        let angle = (angle_offset + ga * l as f64).rem_euclid(PI);
        let exclude: Vec<[f64; 2]> =
            lines.iter().flat_map(|ln| ln.points.iter().copied()).collect();
        let mut new_lines = radial_lines(&[angle], samples_per_line, &exclude);
        let mut line = new_lines.pop().expect("one line requested");
        let room = num_points - total;
        line.points.truncate(room);
        total += line.points.len();
        lines.push(line);
        l += 1;
    }
    Ok(operator_from_lines(lines, image_side))
}

/// How per-frame radial line angles advance across frames.
#[derive(Debug, Clone)]
pub enum AngleSchedule {
    /// Every spoke in acquisition order advances by the golden angle.
    GoldenAngle,
    /// Evenly fanned spokes within a frame; the fan rotates by the golden
    /// angle per frame.
    RotatedUniform,
    /// Explicit per-frame base offsets, spokes evenly fanned within a frame.
    FixedOffsets(Vec<f64>),
}

impl AngleSchedule {
    fn frame_angles(&self, frame: usize, lines_per_frame: usize) -> Result<Vec<f64>> {
        let ga = GOLDEN_ANGLE_DEG.to_radians();
        let fan = |base: f64| -> Vec<f64> {
            (0..lines_per_frame)
                .map(|l| (base + PI * l as f64 / lines_per_frame as f64).rem_euclid(PI))
                .collect()
        };
        match self {
            AngleSchedule::GoldenAngle => Ok((0..lines_per_frame)
                .map(|l| (((frame * lines_per_frame + l) as f64) * ga).rem_euclid(PI))
                .collect()),
            AngleSchedule::RotatedUniform => Ok(fan((frame as f64 * ga).rem_euclid(PI))),
            AngleSchedule::FixedOffsets(offsets) => {
                let base = *offsets.get(frame).ok_or_else(|| {
                    Error::InvalidParams(format!("no angle offset for frame {frame}"))
                })?;
                Ok(fan(base))
            }
        }
    }
}

/// What kind of per-frame operators to construct.
#[derive(Debug, Clone)]
pub enum PerColumnKind {
    /// Independent dense complex Gaussian draws, `rows` x n per frame.
    Gaussian { rows: usize },
    /// Per-frame radial lines; points already sampled by a common radial
    /// operator can be excluded to avoid double counting.
    RadialFourier {
        lines_per_frame: usize,
        samples_per_line: usize,
        image_side: usize,
        exclude: Vec<[f64; 2]>,
    },
}

/// The per-frame measurement matrices A_i (row counts may vary), with an
/// optional cluster assignment when groups of frames share one matrix.
#[derive(Debug, Clone)]
pub struct PerColumnOperators {
    ops: Vec<Arc<DMatrix<C64>>>,
    cluster_map: Option<Vec<usize>>,
}

impl PerColumnOperators {
    pub fn from_matrices(ops: Vec<DMatrix<C64>>) -> Result<Self> {
        if ops.is_empty() {
            return Err(Error::InvalidDims("need at least one frame".into()));
        }
        for m in &ops {
            if !linalg::is_finite_matrix(m) {
                return Err(Error::NonFinite);
            }
        }
        Ok(Self { ops: ops.into_iter().map(Arc::new).collect(), cluster_map: None })
    }

    pub fn num_frames(&self) -> usize {
        self.ops.len()
    }

    pub fn op(&self, frame: usize) -> &DMatrix<C64> {
        &self.ops[frame]
    }

    pub(crate) fn op_arc(&self, frame: usize) -> &Arc<DMatrix<C64>> {
        &self.ops[frame]
    }

    pub fn rows(&self) -> Vec<usize> {
        self.ops.iter().map(|m| m.nrows()).collect()
    }

    pub fn n(&self) -> usize {
        self.ops[0].ncols()
    }

    /// Frame -> cluster index, when built by [`clustered_plan`].
    pub fn cluster_map(&self) -> Option<&[usize]> {
        self.cluster_map.as_deref()
    }

    /// The distinct cluster matrices stacked vertically, for spark checks.
    pub fn stacked_cluster_matrix(&self) -> Option<DMatrix<C64>> {
        let map = self.cluster_map.as_ref()?;
        let p = map.iter().copied().max()? + 1;
        let mut uniq: Vec<&DMatrix<C64>> = Vec::with_capacity(p);
        for c in 0..p {
            let frame = map.iter().position(|&m| m == c)?;
            uniq.push(&self.ops[frame]);
        }
        let total: usize = uniq.iter().map(|m| m.nrows()).sum();
        let mut out = DMatrix::<C64>::zeros(total, self.n());
        let mut at = 0;
        for m in uniq {
            out.rows_mut(at, m.nrows()).copy_from(m);
            at += m.nrows();
        }
        Some(out)
    }
}

/// Build N per-frame operators. Gaussian frames draw independently from
/// per-frame streams of `seed`; radial frames follow the angle schedule
/// (golden-angle by default) and take no randomness.
pub fn per_column_operators(
    kind: &PerColumnKind,
    num_frames: usize,
    n: usize,
    seed: u64,
    schedule: Option<&AngleSchedule>,
) -> Result<PerColumnOperators> {
    if num_frames == 0 || n == 0 {
        return Err(Error::InvalidDims("need at least one frame and one pixel".into()));
    }
    let ops: Vec<DMatrix<C64>> = match kind {
        PerColumnKind::Gaussian { rows } => {
            if *rows == 0 || *rows > n {
                return Err(Error::InvalidDims(format!("need 1 <= rows <= n, got {rows}")));
            }
            (0..num_frames)
                .map(|i| {
                    let mut frame_rng = rng::stream(seed, 0xA1_0000 ^ i as u64);
                    linalg::complex_gaussian(*rows, n, &mut frame_rng)
                })
                .collect()
        }
        PerColumnKind::RadialFourier { lines_per_frame, samples_per_line, image_side, exclude } => {
            if image_side * image_side != n {
                return Err(Error::InvalidImageSide { side: *image_side, n });
            }
            if *lines_per_frame == 0 || *samples_per_line == 0 {
                return Err(Error::InvalidDims("need at least one line and sample".into()));
            }
            let schedule = schedule.unwrap_or(&AngleSchedule::GoldenAngle);
            let mut ops = Vec::with_capacity(num_frames);
            for i in 0..num_frames {
                let angles = schedule.frame_angles(i, *lines_per_frame)?;
                let lines = radial_lines(&angles, *samples_per_line, exclude);
                ops.push(operator_from_lines(lines, *image_side).phi);
            }
            ops
        }
    };
    PerColumnOperators::from_matrices(ops)
}

/// Assign cluster matrices to frames: cluster j takes frames
/// j*rank .. (j+1)*rank, except the last cluster which extends to N.
/// Frames in one cluster share storage, so they reference an identical
/// matrix by construction.
pub fn clustered_plan(
    clusters: Vec<DMatrix<C64>>,
    rank: usize,
    num_frames: usize,
) -> Result<PerColumnOperators> {
    let p = clusters.len();
    if p == 0 || num_frames == 0 {
        return Err(Error::PartitionMismatch("need at least one cluster and frame".into()));
    }
    if p > 1 {
        if rank == 0 {
            return Err(Error::PartitionMismatch("rank must be positive".into()));
        }
        if p * rank > num_frames {
            return Err(Error::PartitionMismatch(format!(
                "{p} clusters of {rank} columns cannot partition {num_frames} frames"
            )));
        }
    }
    let n = clusters[0].ncols();
    if clusters.iter().any(|c| c.ncols() != n) {
        return Err(Error::DimMismatch("cluster matrices must share the column count".into()));
    }
    let shared: Vec<Arc<DMatrix<C64>>> = clusters.into_iter().map(Arc::new).collect();
    let mut ops = Vec::with_capacity(num_frames);
    let mut map = Vec::with_capacity(num_frames);
    for i in 0..num_frames {
        let j = if p == 1 { 0 } else { (i / rank).min(p - 1) };
        ops.push(Arc::clone(&shared[j]));
        map.push(j);
    }
    Ok(PerColumnOperators { ops, cluster_map: Some(map) })
}

/// Measurements of every frame: common block z = phi x and per-frame
/// vectors y_i = A_i x_i.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    pub z: DMatrix<C64>,
    pub y: Vec<DVector<C64>>,
    pub snr_db: Option<f64>,
    pub noise_seed: Option<u64>,
}

impl MeasurementSet {
    pub fn num_frames(&self) -> usize {
        self.z.ncols()
    }

    /// All per-frame vectors stacked in frame order.
    pub fn stacked_y(&self) -> DVector<C64> {
        let total: usize = self.y.iter().map(|v| v.len()).sum();
        let mut out = DVector::<C64>::zeros(total);
        let mut at = 0;
        for v in &self.y {
            out.rows_mut(at, v.len()).copy_from(v);
            at += v.len();
        }
        out
    }

    fn signal_power(&self) -> f64 {
        self.z.iter().map(|c| c.norm_sqr()).sum::<f64>()
            + self.y.iter().flat_map(|v| v.iter()).map(|c| c.norm_sqr()).sum::<f64>()
    }

    fn num_entries(&self) -> usize {
        self.z.len() + self.y.iter().map(|v| v.len()).sum::<usize>()
    }
}

/// Apply the operators exactly: z = phi x, y_i = A_i x_i, no noise.
pub fn measure(
    x: &MatrixSignal,
    phi: &CommonOperator,
    a: &PerColumnOperators,
) -> Result<MeasurementSet> {
    if phi.n() != x.n() {
        return Err(Error::DimMismatch(format!(
            "common operator expects {} pixels, signal has {}",
            phi.n(),
            x.n()
        )));
    }
    if a.num_frames() != x.num_frames() {
        return Err(Error::DimMismatch(format!(
            "{} per-frame operators for {} frames",
            a.num_frames(),
            x.num_frames()
        )));
    }
    if a.n() != x.n() {
        return Err(Error::DimMismatch(format!(
            "per-frame operators expect {} pixels, signal has {}",
            a.n(),
            x.n()
        )));
    }
    let z = phi.phi() * x.data();
    let y = (0..x.num_frames())
        .map(|i| a.op(i) * x.data().column(i))
        .collect();
    Ok(MeasurementSet { z, y, snr_db: None, noise_seed: None })
}

/// Common measurements only; per-frame blocks are empty.
pub fn measure_common(x: &MatrixSignal, phi: &CommonOperator) -> Result<MeasurementSet> {
    if phi.n() != x.n() {
        return Err(Error::DimMismatch(format!(
            "common operator expects {} pixels, signal has {}",
            phi.n(),
            x.n()
        )));
    }
    Ok(MeasurementSet {
        z: phi.phi() * x.data(),
        y: vec![DVector::zeros(0); x.num_frames()],
        snr_db: None,
        noise_seed: None,
    })
}

/// Add i.i.d. complex Gaussian noise over the whole measurement set,
/// scaled so that 10 log10(signal power / noise power) equals `snr_db`
/// exactly. An infinite SNR returns the set unchanged.
pub fn add_noise(m: &MeasurementSet, snr_db: f64, seed: u64) -> Result<MeasurementSet> {
    if snr_db.is_nan() {
        return Err(Error::InvalidParams("snr must not be NaN".into()));
    }
    if snr_db.is_infinite() && snr_db > 0.0 {
        return Ok(m.clone());
    }
    if m.num_entries() == 0 {
        return Err(Error::EmptyMeasurements);
    }
    let signal_power = m.signal_power();
    if signal_power == 0.0 {
        return Err(Error::InvalidParams("zero-power measurements have no SNR".into()));
    }

    let mut rng = rng::stream(seed, 0x4E4F_4953);
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2).expect("valid stddev");
    let mut draw = |len: usize| -> Vec<C64> {
        (0..len).map(|_| C64::new(normal.sample(&mut rng), normal.sample(&mut rng))).collect()
    };
    // column-major over z, then frame order over y
    let z_noise = draw(m.z.len());
    let y_noise: Vec<Vec<C64>> = m.y.iter().map(|v| draw(v.len())).collect();

    let noise_power: f64 = z_noise.iter().map(|c| c.norm_sqr()).sum::<f64>()
        + y_noise.iter().flatten().map(|c| c.norm_sqr()).sum::<f64>();
    let target = signal_power / 10f64.powf(snr_db / 10.0);
    let alpha = (target / noise_power).sqrt();

    let mut out = m.clone();
    for (dst, eps) in out.z.iter_mut().zip(&z_noise) {
        *dst += eps * alpha;
    }
    for (v, eps) in out.y.iter_mut().zip(&y_noise) {
        for (dst, e) in v.iter_mut().zip(eps) {
            *dst += e * alpha;
        }
    }
    out.snr_db = Some(snr_db);
    out.noise_seed = Some(seed);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_phantom, PhantomSpec, SupportLayout};
    use crate::rng::stream;

    fn phantom(n: usize, frames: usize, r: usize, k: usize, seed: u64) -> MatrixSignal {
        generate_phantom(&PhantomSpec {
            n,
            num_frames: frames,
            rank: r,
            sparsity: k,
            seed,
            image_side: None,
            snr_db: None,
            support_layout: SupportLayout::RandomRows,
        })
        .unwrap()
        .x
    }

    #[test]
    fn gaussian_scalar_and_moments() {
        let one = gaussian_operator(1, 1, 0).unwrap();
        assert!(one.phi()[(0, 0)].norm() > 0.0);

        let big = gaussian_operator(20, 400, 3).unwrap();
        let mean_sq =
            big.phi().iter().map(|c| c.norm_sqr()).sum::<f64>() / big.phi().len() as f64;
        assert!((mean_sq - 1.0).abs() < 0.1, "mean |entry|^2 = {mean_sq}");

        assert!(gaussian_operator(5, 3, 0).is_err());
        assert!(gaussian_operator(0, 3, 0).is_err());
    }

    #[test]
    fn gaussian_operator_has_full_spark() {
        let phi = gaussian_operator(5, 10, 7).unwrap();
        let res = crate::verify::spark_bruteforce(phi.phi(), 6).unwrap();
        assert_eq!(res.spark, 6);
    }

    #[test]
    fn radial_axis_aligned_line_matches_1d_dft() {
        let side = 8usize;
        let op = radial_fourier_operator(1, side, side, 0.0).unwrap();
        assert_eq!(op.s(), side);
        let mut rng = stream(9, 0);
        let img = crate::linalg::complex_gaussian(side * side, 1, &mut rng);
        let meas = op.phi() * &img;
        // oracle: 1-D DFT of the column-summed image at the same kx grid
        let mut col_sums = vec![C64::new(0.0, 0.0); side];
        for p in 0..side * side {
            col_sums[p % side] += img[(p, 0)];
        }
        for (t, line) in op.lines().unwrap()[0].points.iter().enumerate() {
            let kx = line[0];
            let mut expect = C64::new(0.0, 0.0);
            for (x, v) in col_sums.iter().enumerate() {
                let ph = -kx * x as f64;
                expect += C64::new(ph.cos(), ph.sin()) * v;
            }
            assert!((meas[(t, 0)] - expect).norm() < 1e-10 * expect.norm().max(1.0));
        }
    }

    #[test]
    fn radial_dc_row_is_all_ones() {
        let side = 6usize;
        let op = radial_fourier_operator(3, 7, side, 0.2).unwrap();
        let lines = op.lines().unwrap();
        // the first line keeps the origin; locate its row
        let mut row = 0usize;
        let mut found = None;
        for line in lines {
            for pt in &line.points {
                if pt[0].abs() < 1e-12 && pt[1].abs() < 1e-12 {
                    found = Some(row);
                }
                row += 1;
            }
        }
        let dc = found.expect("origin sampled");
        for j in 0..op.n() {
            assert!((op.phi()[(dc, j)] - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn radial_origin_dedup_bounds_rows() {
        let op = radial_fourier_operator(4, 9, 8, 0.0).unwrap();
        assert!(op.s() <= 4 * 9);
        assert_eq!(op.s(), 4 * 9 - 3, "three duplicate origins dropped");
        assert_eq!(op.k_points().len(), op.s());
    }

    #[test]
    fn radial_point_budget_is_exact() {
        let op = radial_fourier_points(23, 8, 8, 0.0).unwrap();
        assert_eq!(op.s(), 23);
    }

    #[test]
    fn per_column_gaussian_frames_are_distinct() {
        let kind = PerColumnKind::Gaussian { rows: 6 };
        let ops = per_column_operators(&kind, 10, 30, 5, None).unwrap();
        assert_eq!(ops.num_frames(), 10);
        for i in 0..10 {
            for j in i + 1..10 {
                assert!((ops.op(i) - ops.op(j)).norm() > 1e-6);
            }
        }
        let single = per_column_operators(&kind, 1, 30, 5, None).unwrap();
        assert_eq!(single.num_frames(), 1);
    }

    #[test]
    fn per_column_radial_excludes_common_points() {
        let side = 8usize;
        let common = radial_fourier_operator(2, side, side, 0.0).unwrap();
        let kind = PerColumnKind::RadialFourier {
            lines_per_frame: 3,
            samples_per_line: side,
            image_side: side,
            exclude: common.k_points(),
        };
        let ops = per_column_operators(&kind, 4, side * side, 0, None).unwrap();
        for i in 0..4 {
            // no all-ones DC row may appear: the common operator owns the origin
            for row in 0..ops.op(i).nrows() {
                let is_dc = (0..side * side)
                    .all(|j| (ops.op(i)[(row, j)] - C64::new(1.0, 0.0)).norm() < 1e-12);
                assert!(!is_dc, "frame {i} row {row} duplicates the common origin sample");
            }
        }
    }

    #[test]
    fn clustered_plan_shares_matrices() {
        let mut rng = stream(12, 0);
        let c1 = crate::linalg::complex_gaussian(4, 12, &mut rng);
        let c2 = crate::linalg::complex_gaussian(5, 12, &mut rng);
        let plan = clustered_plan(vec![c1.clone(), c2.clone()], 3, 6).unwrap();
        assert_eq!(plan.cluster_map(), Some(&[0, 0, 0, 1, 1, 1][..]));
        assert!(Arc::ptr_eq(plan.op_arc(0), plan.op_arc(2)));
        assert!(!Arc::ptr_eq(plan.op_arc(0), plan.op_arc(3)));
        let stacked = plan.stacked_cluster_matrix().unwrap();
        assert_eq!(stacked.nrows(), 9);
        assert_eq!(stacked.rows(0, 4), c1.rows(0, 4));

        assert!(clustered_plan(vec![c1.clone(), c2.clone()], 4, 6).is_err());
    }

    #[test]
    fn clustered_single_matches_mmv_bit_for_bit() {
        let mut rng = stream(13, 0);
        let c = crate::linalg::complex_gaussian(5, 24, &mut rng);
        let x = phantom(24, 6, 2, 8, 3);
        let phi = gaussian_operator(2, 24, 1).unwrap();

        let mmv = PerColumnOperators::from_matrices(vec![c.clone(); 6]).unwrap();
        let clustered = clustered_plan(vec![c], 2, 6).unwrap();

        let a = measure(&x, &phi, &mmv).unwrap();
        let b = measure(&x, &phi, &clustered).unwrap();
        for (va, vb) in a.y.iter().zip(&b.y) {
            assert!(va
                .iter()
                .zip(vb.iter())
                .all(|(p, q)| p.re.to_bits() == q.re.to_bits() && p.im.to_bits() == q.im.to_bits()));
        }
    }

    #[test]
    fn measure_zero_and_identity() {
        let n = 10usize;
        let frames = 3usize;
        let zero =
            MatrixSignal::new(DMatrix::from_element(n, frames, C64::new(0.0, 0.0))).unwrap();
        let phi = gaussian_operator(4, n, 2).unwrap();
        let ops = per_column_operators(&PerColumnKind::Gaussian { rows: 5 }, frames, n, 3, None)
            .unwrap();
        let m = measure(&zero, &phi, &ops).unwrap();
        assert!(m.z.iter().all(|c| c.norm() == 0.0));
        assert!(m.y.iter().all(|v| v.iter().all(|c| c.norm() == 0.0)));

        let x = phantom(n, frames, 2, 5, 8);
        let eye = DMatrix::<C64>::identity(n, n);
        let phi_eye = CommonOperator { phi: eye.clone(), kind: OperatorKind::Gaussian, lines: None };
        let ops_eye = PerColumnOperators::from_matrices(vec![eye; frames]).unwrap();
        let m = measure(&x, &phi_eye, &ops_eye).unwrap();
        assert!((0..frames).all(|i| (m.z.column(i) - x.data().column(i)).norm() < 1e-14));
        assert!((0..frames).all(|i| (&m.y[i] - x.data().column(i)).norm() < 1e-14));
    }

    #[test]
    fn measure_matches_handwritten_multiply() {
        let x = phantom(12, 4, 2, 6, 5);
        let phi = gaussian_operator(3, 12, 6).unwrap();
        let ops =
            per_column_operators(&PerColumnKind::Gaussian { rows: 4 }, 4, 12, 7, None).unwrap();
        let m = measure(&x, &phi, &ops).unwrap();
        // oracle: scalar triple loop
        for col in 0..4 {
            for row in 0..3 {
                let mut acc = C64::new(0.0, 0.0);
                for p in 0..12 {
                    acc += phi.phi()[(row, p)] * x.data()[(p, col)];
                }
                assert!((m.z[(row, col)] - acc).norm() <= 1e-13 * acc.norm().max(1.0));
            }
            for row in 0..4 {
                let mut acc = C64::new(0.0, 0.0);
                for p in 0..12 {
                    acc += ops.op(col)[(row, p)] * x.data()[(p, col)];
                }
                assert!((m.y[col][row] - acc).norm() <= 1e-13 * acc.norm().max(1.0));
            }
        }
    }

    #[test]
    fn measure_rejects_dimension_mismatch() {
        let x = phantom(12, 4, 2, 6, 5);
        let phi = gaussian_operator(3, 11, 6).unwrap();
        let ops =
            per_column_operators(&PerColumnKind::Gaussian { rows: 4 }, 4, 12, 7, None).unwrap();
        assert!(matches!(measure(&x, &phi, &ops), Err(Error::DimMismatch(_))));
    }

    #[test]
    fn noise_hits_requested_snr_exactly_and_is_deterministic() {
        let x = phantom(20, 6, 2, 8, 4);
        let phi = gaussian_operator(5, 20, 1).unwrap();
        let ops =
            per_column_operators(&PerColumnKind::Gaussian { rows: 6 }, 6, 20, 2, None).unwrap();
        let clean = measure(&x, &phi, &ops).unwrap();

        let noisy = add_noise(&clean, 35.0, 77).unwrap();
        let noise_power: f64 = noisy
            .z
            .iter()
            .zip(clean.z.iter())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            + noisy
                .y
                .iter()
                .zip(&clean.y)
                .flat_map(|(a, b)| a.iter().zip(b.iter()))
                .map(|(p, q)| (p - q).norm_sqr())
                .sum::<f64>();
        let realized = 10.0 * (clean.signal_power() / noise_power).log10();
        assert!((realized - 35.0).abs() < 1e-9, "realized SNR {realized}");

        let again = add_noise(&clean, 35.0, 77).unwrap();
        assert!(noisy
            .z
            .iter()
            .zip(again.z.iter())
            .all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));

        let unchanged = add_noise(&clean, f64::INFINITY, 77).unwrap();
        assert!(unchanged.z == clean.z);
    }

    #[test]
    fn noise_rejects_empty_or_silent_sets() {
        let empty = MeasurementSet {
            z: DMatrix::zeros(0, 3),
            y: vec![DVector::zeros(0); 3],
            snr_db: None,
            noise_seed: None,
        };
        assert!(matches!(add_noise(&empty, 30.0, 0), Err(Error::EmptyMeasurements)));

        let silent = MeasurementSet {
            z: DMatrix::zeros(2, 3),
            y: vec![DVector::zeros(0); 3],
            snr_db: None,
            noise_seed: None,
        };
        assert!(add_noise(&silent, 30.0, 0).is_err());
    }

    #[test]
    fn operators_satisfy_adjoint_identity() {
        let mut rng = stream(15, 0);
        for op in [
            gaussian_operator(5, 16, 4).unwrap(),
            radial_fourier_operator(2, 4, 4, 0.3).unwrap(),
        ] {
            let a = op.phi();
            let x = crate::linalg::complex_gaussian(a.ncols(), 1, &mut rng);
            let y = crate::linalg::complex_gaussian(a.nrows(), 1, &mut rng);
            let lhs = (a * &x).dotc(&y);
            let rhs = x.dotc(&(a.adjoint() * &y));
            assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm().max(1.0));
        }
    }
}
