//! Dense row-major matrices over `f64` and `Complex64`.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

/// Field element a [`Matrix`] can hold.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + Default
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + 'static
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_real(x: f64) -> Self;
    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn im(self) -> f64;
    fn abs_sq(self) -> f64;
    fn scale(self, s: f64) -> Self;

    fn abs(self) -> f64 {
        self.abs_sq().sqrt()
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_real(x: f64) -> Self {
        x
    }
    fn conj(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
    fn im(self) -> f64 {
        0.0
    }
    fn abs_sq(self) -> f64 {
        self * self
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn abs(self) -> f64 {
        f64::abs(self)
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn im(self) -> f64 {
        self.im
    }
    fn abs_sq(self) -> f64 {
        self.norm_sqr()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// Dense matrix stored row-major: entry `(i, j)` lives at `data[i * cols + j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type RealMatrix = Matrix<f64>;
pub type ComplexMatrix = Matrix<Complex64>;

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(
            data.len(),
            rows * cols,
            "matrix data length does not match {rows}x{cols}"
        );
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<T> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        t
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        self.map(|x| x * s)
    }

    pub fn trace(&self) -> T {
        let mut acc = T::zero();
        for i in 0..self.rows.min(self.cols) {
            acc += self[(i, i)];
        }
        acc
    }

    pub fn frobenius_norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x.abs_sq()).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.frobenius_norm_sq().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Largest entrywise `|self - other|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (&a, &b)| m.max((a - b).abs()))
    }

    /// Largest `|M[i][j] - conj(M[j][i])|`; `f64::INFINITY` for non-square input.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                let d = (self.data[i * n + j] - self.data[j * n + i].conj()).abs();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Hermitian to `1e-12` relative to the largest entry.
    pub fn is_hermitian(&self) -> bool {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        self.hermiticity_defect() < 1e-12 * scale
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(
            self.cols, rhs.rows,
            "matmul dimension mismatch: {}x{} * {}x{}",
            self.rows, self.cols, rhs.rows, rhs.cols
        );
        let (n, m, p) = (self.rows, self.cols, rhs.cols);
        let mut out = Self::zeros(n, p);
        for i in 0..n {
            let out_row = &mut out.data[i * p..(i + 1) * p];
            for k in 0..m {
                let a = self.data[i * m + k];
                if a == T::zero() {
                    continue;
                }
                let rhs_row = &rhs.data[k * p..(k + 1) * p];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self * rhs - rhs * self`.
    pub fn commutator(&self, rhs: &Self) -> Self {
        let mut ab = self.matmul(rhs);
        let ba = rhs.matmul(self);
        for (x, &y) in ab.data.iter_mut().zip(&ba.data) {
            *x = *x - y;
        }
        ab
    }

    pub fn mat_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for (&a, &b) in self.row(i).iter().zip(v) {
                    acc += a * b;
                }
                acc
            })
            .collect()
    }

    /// Applies `perm` to rows and columns: `out[i][j] = self[perm[i]][perm[j]]`.
    pub fn permute_symmetric(&self, perm: &[usize]) -> Self {
        assert!(self.is_square() && perm.len() == self.rows);
        let n = self.rows;
        let mut out = Self::zeros(n, n);
        for (i, &pi) in perm.iter().enumerate() {
            for (j, &pj) in perm.iter().enumerate() {
                out.data[i * n + j] = self.data[pi * n + pj];
            }
        }
        out
    }
}

impl RealMatrix {
    pub fn to_complex(&self) -> ComplexMatrix {
        self.map(Complex64::from_real)
    }
}

impl ComplexMatrix {
    /// Largest `|Im M[i][j]|`.
    pub fn max_imag(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.im.abs()))
    }

    pub fn real_part(&self) -> RealMatrix {
        self.map(|x| x.re)
    }
}

impl<T> Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: Scalar> Add for &Matrix<T> {
    type Output = Matrix<T>;
    fn add(self, rhs: Self) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl<T: Scalar> Sub for &Matrix<T> {
    type Output = Matrix<T>;
    fn sub(self, rhs: Self) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl<T: Scalar> Mul for &Matrix<T> {
    type Output = Matrix<T>;
    fn mul(self, rhs: Self) -> Matrix<T> {
        self.matmul(rhs)
    }
}

/// Kronecker product: `out[i*b.rows + k][j*b.cols + l] = a[i][j] * b[k][l]`.
pub fn kron<T: Scalar>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = Matrix::zeros(rows, cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            if aij == T::zero() {
                continue;
            }
            for k in 0..b.rows {
                let base = (i * b.rows + k) * cols + j * b.cols;
                let brow = b.row(k);
                for (l, &bkl) in brow.iter().enumerate() {
                    out.data[base + l] = aij * bkl;
                }
            }
        }
    }
    out
}

/// Single-qubit Pauli matrices, `σz|↑⟩ = +|↑⟩` with `|↑⟩` as basis index 0.
pub mod pauli {
    use super::ComplexMatrix;
    use num_complex::Complex64;

    const O: Complex64 = Complex64::new(0.0, 0.0);
    const ONE: Complex64 = Complex64::new(1.0, 0.0);
    const I: Complex64 = Complex64::new(0.0, 1.0);

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }
    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_vec(2, 2, vec![O, ONE, ONE, O])
    }
    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_vec(2, 2, vec![O, -I, I, O])
    }
    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_vec(2, 2, vec![ONE, O, O, -ONE])
    }
}
