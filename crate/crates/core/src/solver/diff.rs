//! Forward-difference operators used as the sparsifying transform:
//! 1-D along a coefficient column, or horizontal + vertical stacked on a
//! square pixel grid. Neumann boundary: the last difference in each
//! direction is zero.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffOp {
    OneD { n: usize },
    TwoD { side: usize },
}

impl DiffOp {
    /// 2-D differences when an image side is given (side^2 must equal n),
    /// 1-D differences otherwise.
    pub fn for_signal(n: usize, image_side: Option<usize>) -> Result<Self> {
        match image_side {
            Some(side) => {
                if side * side != n {
                    Err(Error::InvalidImageSide { side, n })
                } else {
                    Ok(DiffOp::TwoD { side })
                }
            }
            None => Ok(DiffOp::OneD { n }),
        }
    }

    pub fn n(&self) -> usize {
        match *self {
            DiffOp::OneD { n } => n,
            DiffOp::TwoD { side } => side * side,
        }
    }

    /// Gradient positions produced per input column.
    pub fn rows_out(&self) -> usize {
        match *self {
            DiffOp::OneD { n } => n,
            DiffOp::TwoD { side } => 2 * side * side,
        }
    }

    /// out = T x for one real plane.
    pub fn apply_plane(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n());
        debug_assert_eq!(out.len(), self.rows_out());
        match *self {
            DiffOp::OneD { n } => {
                for i in 0..n.saturating_sub(1) {
                    out[i] = x[i + 1] - x[i];
                }
                if n > 0 {
                    out[n - 1] = 0.0;
                }
            }
            DiffOp::TwoD { side } => {
                let n = side * side;
                let (h, v) = out.split_at_mut(n);
                for p in 0..n {
                    let px = p % side;
                    let py = p / side;
                    h[p] = if px + 1 < side { x[p + 1] - x[p] } else { 0.0 };
                    v[p] = if py + 1 < side { x[p + side] - x[p] } else { 0.0 };
                }
            }
        }
    }

    /// out = T^H v for one real plane (overwrites `out`).
    pub fn adjoint_plane(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.rows_out());
        debug_assert_eq!(out.len(), self.n());
        match *self {
            DiffOp::OneD { n } => {
                if n == 1 {
                    out[0] = 0.0;
                    return;
                }
                out[0] = -v[0];
                for j in 1..n - 1 {
                    out[j] = v[j - 1] - v[j];
                }
                out[n - 1] = v[n - 2];
            }
            DiffOp::TwoD { side } => {
                let n = side * side;
                let (h, w) = v.split_at(n);
                for p in 0..n {
                    let px = p % side;
                    let py = p / side;
                    let mut acc = 0.0;
                    if px > 0 {
                        acc += h[p - 1];
                    }
                    if px + 1 < side {
                        acc -= h[p];
                    }
                    if py > 0 {
                        acc += w[p - side];
                    }
                    if py + 1 < side {
                        acc -= w[p];
                    }
                    out[p] = acc;
                }
            }
        }
    }
}
