//! Split-complex (separate real/imaginary plane) storage and kernels for
//! the hot per-frame matrix products. Interleaved complex slices defeat
//! autovectorization; planar f64 loops do not.

use nalgebra::DMatrix;

use crate::C64;

/// Dense column-major matrix stored as two f64 planes.
#[derive(Debug, Clone)]
pub struct PlanarMatrix {
    pub rows: usize,
    pub cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl PlanarMatrix {
    pub fn from_dense(m: &DMatrix<C64>) -> Self {
        let s = m.as_slice();
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            re: s.iter().map(|c| c.re).collect(),
            im: s.iter().map(|c| c.im).collect(),
        }
    }

    /// y = A x (overwrites y).
    pub fn gemv(&self, x_re: &[f64], x_im: &[f64], y_re: &mut [f64], y_im: &mut [f64]) {
        y_re.fill(0.0);
        y_im.fill(0.0);
        let s = self.rows;
        for j in 0..self.cols {
            let (xr, xi) = (x_re[j], x_im[j]);
            if xr == 0.0 && xi == 0.0 {
                continue;
            }
            let cr = &self.re[j * s..(j + 1) * s];
            let ci = &self.im[j * s..(j + 1) * s];
            for (((yr, yi), ar), ai) in
                y_re.iter_mut().zip(y_im.iter_mut()).zip(cr).zip(ci)
            {
                *yr += ar * xr - ai * xi;
                *yi += ar * xi + ai * xr;
            }
        }
    }

    /// Entry (row, col) as a (re, im) pair.
    pub fn entry(&self, row: usize, col: usize) -> (f64, f64) {
        let idx = col * self.rows + row;
        (self.re[idx], self.im[idx])
    }

    /// out = A^H v (overwrites out).
    pub fn gemv_adjoint(&self, v_re: &[f64], v_im: &[f64], out_re: &mut [f64], out_im: &mut [f64]) {
        let s = self.rows;
        for j in 0..self.cols {
            let cr = &self.re[j * s..(j + 1) * s];
            let ci = &self.im[j * s..(j + 1) * s];
            let mut dr = 0.0;
            let mut di = 0.0;
            for (((ar, ai), vr), vi) in cr.iter().zip(ci).zip(v_re).zip(v_im) {
                dr += ar * vr + ai * vi;
                di += ar * vi - ai * vr;
            }
            out_re[j] = dr;
            out_im[j] = di;
        }
    }
}

/// Complex vector as two planes.
#[derive(Debug, Clone)]
pub struct PlanarVec {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl PlanarVec {
    pub fn zeros(len: usize) -> Self {
        Self { re: vec![0.0; len], im: vec![0.0; len] }
    }

    pub fn from_complex(v: &[C64]) -> Self {
        Self { re: v.iter().map(|c| c.re).collect(), im: v.iter().map(|c| c.im).collect() }
    }

    pub fn to_complex(&self) -> Vec<C64> {
        self.re.iter().zip(&self.im).map(|(&r, &i)| C64::new(r, i)).collect()
    }

    pub fn len(&self) -> usize {
        self.re.len()
    }

    pub fn is_empty(&self) -> bool {
        self.re.is_empty()
    }

    pub fn fill_zero(&mut self) {
        self.re.fill(0.0);
        self.im.fill(0.0);
    }

    pub fn norm_sqr(&self) -> f64 {
        self.re.iter().map(|v| v * v).sum::<f64>() + self.im.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Re <self, other>; the full inner product is real for the vectors CG
    /// pairs together (Hermitian operators, real step sizes).
    pub fn dot_re(&self, other: &Self) -> f64 {
        let mut acc = 0.0;
        for (a, b) in self.re.iter().zip(&other.re) {
            acc += a * b;
        }
        for (a, b) in self.im.iter().zip(&other.im) {
            acc += a * b;
        }
        acc
    }

    /// self += alpha * x, real alpha.
    pub fn axpy(&mut self, alpha: f64, x: &Self) {
        for (d, s) in self.re.iter_mut().zip(&x.re) {
            *d += alpha * s;
        }
        for (d, s) in self.im.iter_mut().zip(&x.im) {
            *d += alpha * s;
        }
    }

    /// self = x + beta * self.
    pub fn xpby(&mut self, x: &Self, beta: f64) {
        for (d, s) in self.re.iter_mut().zip(&x.re) {
            *d = s + beta * *d;
        }
        for (d, s) in self.im.iter_mut().zip(&x.im) {
            *d = s + beta * *d;
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for v in &mut self.re {
            *v *= alpha;
        }
        for v in &mut self.im {
            *v *= alpha;
        }
    }

    pub fn copy_from(&mut self, other: &Self) {
        self.re.copy_from_slice(&other.re);
        self.im.copy_from_slice(&other.im);
    }
}
