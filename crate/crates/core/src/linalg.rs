//! Small dense complex matrices. Sizes here are n <= 8 or so, nothing clever.

use std::ops::{Index, IndexMut};

use serde::Serialize;

use crate::scalar::{cz, c1, Real, C};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![cz(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = c1();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C<T>>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err(Error::InvalidSystem("ragged matrix rows".into()));
        }
        Ok(Self { rows: r, cols: c, data: rows.concat() })
    }

    /// Wraps a row-major buffer.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C<T>>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == cz() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] = out[(i, j)] + a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).fold(cz(), |acc, j| acc + self[(i, j)] * v[j]))
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, a| m.max(a.norm()))
    }

    /// `out[i][j] = self[p[i]][p[j]]`.
    pub fn permuted(&self, p: &[usize]) -> Self {
        Self::from_fn(self.rows, self.cols, |i, j| self[(p[i], p[j])])
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> C<T> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = c1::<T>();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| a[x * n + col].norm().partial_cmp(&a[y * n + col].norm()).unwrap())
                .unwrap();
            if a[piv * n + col] == cz() {
                return cz();
            }
            if piv != col {
                for j in 0..n {
                    a.swap(piv * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col];
            det = det * p;
            for r in col + 1..n {
                let f = a[r * n + col] / p;
                for j in col..n {
                    let v = a[col * n + j];
                    a[r * n + j] = a[r * n + j] - f * v;
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan; errors on a numerically singular matrix.
    pub fn inverse(&self) -> Result<Self> {
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&x, &y| a[(x, col)].norm().partial_cmp(&a[(y, col)].norm()).unwrap())
                .unwrap();
            if a[(piv, col)].norm() <= T::min_positive_value() {
                return Err(Error::Numerical("singular matrix".into()));
            }
            for j in 0..n {
                let (t1, t2) = (a[(piv, j)], a[(col, j)]);
                a[(piv, j)] = t2;
                a[(col, j)] = t1;
                let (t1, t2) = (inv[(piv, j)], inv[(col, j)]);
                inv[(piv, j)] = t2;
                inv[(col, j)] = t1;
            }
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] = a[(col, j)] / p;
                inv[(col, j)] = inv[(col, j)] / p;
            }
            for r in 0..n {
                if r != col {
                    let f = a[(r, col)];
                    if f != cz() {
                        for j in 0..n {
                            let (x, y) = (a[(col, j)], inv[(col, j)]);
                            a[(r, j)] = a[(r, j)] - f * x;
                            inv[(r, j)] = inv[(r, j)] - f * y;
                        }
                    }
                }
            }
        }
        Ok(inv)
    }
}

impl<T: Real> Index<(usize, usize)> for CMatrix<T> {
    type Output = C<T>;
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.cols + j]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn det_and_inverse_of_2x2() {
        let m = CMatrix::from_rows(&[
            vec![Complex64::new(1.0, 1.0), Complex64::new(2.0, 0.0)],
            vec![Complex64::new(0.0, -1.0), Complex64::new(3.0, 0.5)],
        ])
        .unwrap();
        let det = m.det();
        let expect = Complex64::new(1.0, 1.0) * Complex64::new(3.0, 0.5) - Complex64::new(0.0, -2.0);
        assert!((det - expect).norm() < 1e-14);
        let id = m.mul(&m.inverse().unwrap());
        assert!(id.sub(&CMatrix::identity(2)).max_abs() < 1e-14);
    }

    #[test]
    fn permuted_reorders_rows_and_columns() {
        let m = CMatrix::<f64>::from_fn(3, 3, |i, j| Complex64::new((3 * i + j) as f64, 0.0));
        let p = m.permuted(&[2, 0, 1]);
        assert_eq!(p[(0, 0)].re, 8.0);
        assert_eq!(p[(0, 1)].re, 6.0);
        assert_eq!(p[(1, 2)].re, 1.0);
    }
}
