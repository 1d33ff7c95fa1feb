//! Small dense linear algebra and the hand-written derivative rules used by
//! the adapter head and the distillation losses.
//!
//! Every reduction sums sequentially over the inner dimension, starting from
//! `0.0`, so results are reproducible bit-for-bit against naive loops written
//! in the same order.

use std::ops::Index;

use crate::error::{Error, Result};

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from row-major data, rejecting bad lengths and
    /// non-finite entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                context: "Matrix::from_vec",
                expected: rows * cols,
                actual: data.len(),
            });
        }
        ensure_finite(&data, "Matrix::from_vec")?;
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::Dimension {
                    context: "Matrix::from_rows",
                    expected: cols,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Matrix::from_vec(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

/// Dense vector of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vector {
    data: Vec<f64>,
}

impl Vector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        ensure_finite(&data, "Vector::new")?;
        Ok(Vector { data })
    }

    pub fn zeros(len: usize) -> Self {
        Vector {
            data: vec![0.0; len],
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.data
    }

    pub(crate) fn from_trusted(data: Vec<f64>) -> Self {
        Vector { data }
    }
}

impl Index<usize> for Vector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

pub(crate) fn ensure_finite(data: &[f64], context: &'static str) -> Result<()> {
    if data.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(context))
    }
}

/// Matrix product `a × b`.
///
/// Loops run in i-k-j order, so each output entry accumulates
/// `a[i][0]·b[0][j] + a[i][1]·b[1][j] + ...` in ascending `k`, exactly as a
/// naive triple loop would.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols != b.rows {
        return Err(Error::Dimension {
            context: "matmul",
            expected: a.cols,
            actual: b.rows,
        });
    }
    let n = b.cols;
    let mut out = Matrix::zeros(a.rows, n);
    for i in 0..a.rows {
        let acc = &mut out.data[i * n..(i + 1) * n];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            let brow = &b.data[k * n..(k + 1) * n];
            for (o, &bkj) in acc.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
    ensure_finite(&out.data, "matmul")?;
    Ok(out)
}

/// Elementwise `max(0, x)`.
pub fn relu(x: &Vector) -> Vector {
    Vector {
        data: x.data.iter().map(|&v| relu_scalar(v)).collect(),
    }
}

#[inline]
pub fn relu_scalar(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// `log(1 + max(0, x))`, the saturating sparse activation.
#[inline]
pub fn log1p_relu(x: f64) -> f64 {
    relu_scalar(x).ln_1p()
}

/// Derivative of [`log1p_relu`]; zero at and below the kink.
#[inline]
pub fn log1p_relu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0 / (1.0 + x)
    } else {
        0.0
    }
}

/// Sequential dot product.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        s += x * y;
    }
    s
}

/// Row vector times matrix, `x · m`.
pub fn vecmat(x: &[f64], m: &Matrix) -> Vec<f64> {
    debug_assert_eq!(x.len(), m.rows);
    let mut out = vec![0.0; m.cols];
    for (k, &xk) in x.iter().enumerate() {
        for (o, &w) in out.iter_mut().zip(m.row(k)) {
            *o += xk * w;
        }
    }
    out
}

/// Backward pass of the affine map `y = x · w + b`.
///
/// Accumulates `xᵀ·g` into `grad_w` and `g` into `grad_b`, and returns the
/// gradient with respect to `x`.
pub fn affine_backward(
    x: &[f64],
    w: &Matrix,
    grad_out: &[f64],
    grad_w: &mut Matrix,
    grad_b: &mut [f64],
) -> Vec<f64> {
    debug_assert_eq!(x.len(), w.rows);
    debug_assert_eq!(grad_out.len(), w.cols);
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        let row = &mut grad_w.data[i * w.cols..(i + 1) * w.cols];
        for (gw, &g) in row.iter_mut().zip(grad_out) {
            *gw += xi * g;
        }
    }
    for (gb, &g) in grad_b.iter_mut().zip(grad_out) {
        *gb += g;
    }
    (0..w.rows).map(|i| dot(w.row(i), grad_out)).collect()
}

/// Zeroes `grad` wherever the ReLU input was not strictly positive.
pub fn relu_backward(pre_activation: &[f64], grad: &mut [f64]) {
    for (g, &p) in grad.iter_mut().zip(pre_activation) {
        if p <= 0.0 {
            *g = 0.0;
        }
    }
}

/// Numerically stable log-softmax.
pub fn log_softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for &v in x {
        sum += (v - max).exp();
    }
    let lse = max + sum.ln();
    x.iter().map(|&v| v - lse).collect()
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    log_softmax(x).into_iter().map(f64::exp).collect()
}
