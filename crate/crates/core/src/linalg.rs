//! Small dense complex/real matrices, the real-expansion operator, vectorization
//! helpers and a modified Gram-Schmidt QR.
//!
//! Everything in this crate lives at 16x16 or below, so storage is a flat
//! row-major `Vec` with no blocking.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

/// Dense row-major real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from a row-major slice.
    ///
    /// Panics if `data.len() != rows * cols`.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[Complex64]) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Self {
            rows,
            cols,
            data: data.to_vec(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Conjugate transpose.
    pub fn hermitian(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    /// Squared Frobenius norm.
    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Checked product; errors on inner dimension mismatch.
    pub fn try_mul(&self, rhs: &ComplexMatrix) -> Result<ComplexMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(l, j)];
                }
            }
        }
        Ok(out)
    }

    /// Adds `s * other` in place. Shapes must match.
    pub fn axpy(&mut self, s: f64, other: &ComplexMatrix) {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    /// Maximum entrywise distance to another matrix of the same shape.
    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.try_mul(rhs).expect("matrix product dimension mismatch")
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl fmt::Display for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:>9.5}{:+.5}j", z.re, z.im)
                })
                .collect();
            writeln!(f, "[{}]", row.join("  "))?;
        }
        Ok(())
    }
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        Self {
            rows,
            cols,
            data: data.to_vec(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix whose columns are the given equal-length vectors.
    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == rows), "ragged columns");
        Self::from_fn(rows, cols, |i, j| columns[j][i])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &RealMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_sqr(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn try_mul(&self, rhs: &RealMatrix) -> Result<RealMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = RealMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out.data[i * rhs.cols + j] += a * rhs.data[l * rhs.cols + j];
                }
            }
        }
        Ok(out)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `selfᵀ v` without materializing the transpose.
    pub fn tr_mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![0.0; self.cols];
        for (i, &vi) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(i)) {
                *o += a * vi;
            }
        }
        out
    }

    /// Block-diagonal `I_t ⊗ self`.
    pub fn kron_identity_left(&self, t: usize) -> RealMatrix {
        let mut out = RealMatrix::zeros(t * self.rows, t * self.cols);
        for b in 0..t {
            for i in 0..self.rows {
                for j in 0..self.cols {
                    out[(b * self.rows + i, b * self.cols + j)] = self[(i, j)];
                }
            }
        }
        out
    }
}

impl Index<(usize, usize)> for RealMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for RealMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &RealMatrix {
    type Output = RealMatrix;
    fn mul(self, rhs: &RealMatrix) -> RealMatrix {
        self.try_mul(rhs).expect("matrix product dimension mismatch")
    }
}

impl fmt::Display for RealMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|x| format!("{x:>9.5}")).collect();
            writeln!(f, "[{}]", row.join(" "))?;
        }
        Ok(())
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Real expansion: each entry `x` becomes the block `[[x_I, -x_Q], [x_Q, x_I]]`.
pub fn check_expand(x: &ComplexMatrix) -> RealMatrix {
    let mut out = RealMatrix::zeros(2 * x.rows(), 2 * x.cols());
    for i in 0..x.rows() {
        for j in 0..x.cols() {
            let z = x[(i, j)];
            out[(2 * i, 2 * j)] = z.re;
            out[(2 * i, 2 * j + 1)] = -z.im;
            out[(2 * i + 1, 2 * j)] = z.im;
            out[(2 * i + 1, 2 * j + 1)] = z.re;
        }
    }
    out
}

/// Interleaves `[re, im]` per entry.
pub fn vec_tilde(x: &[Complex64]) -> Vec<f64> {
    x.iter().flat_map(|z| [z.re, z.im]).collect()
}

/// Interleaves `[-im, re]` per entry, the second column of each expanded block.
pub fn vec_tilde_prime(x: &[Complex64]) -> Vec<f64> {
    x.iter().flat_map(|z| [-z.im, z.re]).collect()
}

/// Inverse of [`vec_tilde`]. Panics on odd length.
pub fn from_vec_tilde(v: &[f64]) -> Vec<Complex64> {
    assert!(v.len().is_multiple_of(2), "interleaved vector must have even length");
    v.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect()
}

/// Column-major stacking of a matrix.
pub fn vec_stack(x: &ComplexMatrix) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(x.rows() * x.cols());
    for j in 0..x.cols() {
        for i in 0..x.rows() {
            out.push(x[(i, j)]);
        }
    }
    out
}

/// Thin QR factorization `H = Q R` of a tall real matrix.
#[derive(Clone, Debug)]
pub struct QrFactorization {
    /// `p x q`, orthonormal columns.
    pub q: RealMatrix,
    /// `q x q`, upper triangular with positive diagonal.
    pub r: RealMatrix,
}

impl QrFactorization {
    pub fn reconstruct(&self) -> RealMatrix {
        &self.q * &self.r
    }
}

/// Modified Gram-Schmidt QR.
///
/// Column `i` is normalized and then immediately projected out of every later
/// column, so `r[(i, j)]` is the inner product of `q_i` with the partially
/// reduced `h_j`. In exact arithmetic this equals `<q_i, h_j>`.
pub fn gram_schmidt_qr(h: &RealMatrix) -> Result<QrFactorization> {
    let (p, n) = (h.rows(), h.cols());
    if p < n {
        return Err(Error::DimensionMismatch(format!(
            "QR needs rows >= cols, got {p}x{n}"
        )));
    }
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| h.column(j)).collect();
    let largest = cols.iter().map(|c| norm(c)).fold(0.0, f64::max);
    let rank_tol = 1e-10 * largest;

    let mut r = RealMatrix::zeros(n, n);
    for i in 0..n {
        let nrm = norm(&cols[i]);
        if nrm <= rank_tol || nrm == 0.0 {
            return Err(Error::RankDeficient {
                column: i,
                norm: nrm,
                tolerance: rank_tol,
            });
        }
        r[(i, i)] = nrm;
        cols[i].iter_mut().for_each(|x| *x /= nrm);
        let (done, rest) = cols.split_at_mut(i + 1);
        let qi = &done[i];
        for (off, cj) in rest.iter_mut().enumerate() {
            let proj = dot(qi, cj);
            r[(i, i + 1 + off)] = proj;
            for (c, q) in cj.iter_mut().zip(qi) {
                *c -= proj * q;
            }
        }
    }
    Ok(QrFactorization {
        q: RealMatrix::from_columns(&cols),
        r,
    })
}

/// Determinant of a square complex matrix.
///
/// Closed forms for n <= 2, LU with partial pivoting otherwise.
pub fn det_complex(x: &ComplexMatrix) -> Result<Complex64> {
    if !x.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "determinant of non-square {}x{} matrix",
            x.rows(),
            x.cols()
        )));
    }
    Ok(det_square(x.as_slice(), x.rows()))
}

/// Determinant of a row-major `n x n` buffer. Used on hot paths that keep
/// their own storage.
pub(crate) fn det_square(a: &[Complex64], n: usize) -> Complex64 {
    match n {
        0 => Complex64::new(1.0, 0.0),
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        _ => {
            let mut m = a.to_vec();
            let mut det = Complex64::new(1.0, 0.0);
            for k in 0..n {
                let mut piv = k;
                let mut best = m[k * n + k].norm_sqr();
                for i in k + 1..n {
                    let v = m[i * n + k].norm_sqr();
                    if v > best {
                        best = v;
                        piv = i;
                    }
                }
                if best == 0.0 {
                    return Complex64::new(0.0, 0.0);
                }
                if piv != k {
                    for j in 0..n {
                        m.swap(k * n + j, piv * n + j);
                    }
                    det = -det;
                }
                let pivot = m[k * n + k];
                det *= pivot;
                let inv = pivot.inv();
                for i in k + 1..n {
                    let f = m[i * n + k] * inv;
                    if f == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    for j in k + 1..n {
                        let t = m[k * n + j];
                        m[i * n + j] -= f * t;
                    }
                }
            }
            det
        }
    }
}
