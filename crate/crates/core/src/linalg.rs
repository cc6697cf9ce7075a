//! Small dense linear algebra for the estimators.
//!
//! Problems here never exceed a few hundred rows by a couple dozen columns, so
//! row-major storage with LU (square solves) and column-pivoted Householder QR
//! (least squares) is all that is needed.

use crate::error::{CrfError, Result};
use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

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

    /// Builds a matrix from equal-length rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
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

    /// `Aᵀ A`.
    pub fn gram(&self) -> Matrix<T> {
        let n = self.cols;
        let mut g = Matrix::zeros(n, n);
        for r in 0..self.rows {
            let row = self.row(r);
            for i in 0..n {
                let ri = row[i];
                for j in i..n {
                    g[(i, j)] += ri * row[j];
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                g[(i, j)] = g[(j, i)];
            }
        }
        g
    }

    /// `Aᵀ v`.
    pub fn t_mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.rows);
        let mut out = vec![T::zero(); self.cols];
        for (r, &vr) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(r)) {
                *o += a * vr;
            }
        }
        out
    }

    /// `A v`.
    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows).map(|r| dot(self.row(r), v)).collect()
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm_sq<T: Scalar>(a: &[T]) -> T {
    dot(a, a)
}

/// Solves the square system `A x = b` by LU with partial pivoting.
pub fn solve<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.rows;
    assert_eq!(a.cols, n, "solve needs a square matrix");
    assert_eq!(b.len(), n);
    let mut m = a.clone();
    let mut x = b.to_vec();
    let scale = m
        .data
        .iter()
        .fold(T::zero(), |acc, v| acc.max(v.abs()))
        .max(T::min_positive_value());
    let tiny = scale * T::epsilon() * T::from_count(n.max(1));
    for k in 0..n {
        let (p, pivot) = (k..n)
            .map(|i| (i, m[(i, k)].abs()))
            .fold((k, T::zero()), |best, cur| if cur.1 > best.1 { cur } else { best });
        if !(pivot > tiny) {
            return Err(CrfError::Singular);
        }
        if p != k {
            for j in 0..n {
                m.data.swap(k * n + j, p * n + j);
            }
            x.swap(k, p);
        }
        let d = m[(k, k)];
        for i in k + 1..n {
            let f = m[(i, k)] / d;
            if f != T::zero() {
                for j in k..n {
                    let v = m[(k, j)];
                    m[(i, j)] -= f * v;
                }
                let xk = x[k];
                x[i] -= f * xk;
            }
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in k + 1..n {
            s -= m[(k, j)] * x[j];
        }
        x[k] = s / m[(k, k)];
    }
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(CrfError::Singular)
    }
}

/// Least-squares solution with its numerical rank.
#[derive(Debug, Clone)]
pub struct LstsqSolution<T> {
    pub x: Vec<T>,
    pub rank: usize,
}

/// Minimizes `‖A x − b‖²` by Householder QR with column pivoting.
///
/// Columns whose pivoted diagonal falls below `tol · |R₀₀|` are treated as
/// dependent; their coefficients are set to zero (basic solution).
pub fn lstsq<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Result<LstsqSolution<T>> {
    let (m, n) = (a.rows, a.cols);
    assert_eq!(b.len(), m);
    if m == 0 || n == 0 {
        return Err(CrfError::EmptyData);
    }
    if a.data.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(CrfError::NonFinite("least-squares system".into()));
    }
    let mut r = a.clone();
    let mut qtb = b.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut col_norms: Vec<T> = (0..n).map(|j| norm_sq(&r.column(j))).collect();
    let steps = m.min(n);
    let tol = T::epsilon() * T::from_count(m.max(n)) * T::lit(10.0);
    let mut rank = 0;
    let mut r00 = T::zero();

    for k in 0..steps {
        // pivot: largest remaining column norm
        let p = (k..n)
            .max_by(|&i, &j| col_norms[i].partial_cmp(&col_norms[j]).unwrap())
            .unwrap();
        if p != k {
            for i in 0..m {
                r.data.swap(i * n + k, i * n + p);
            }
            col_norms.swap(k, p);
            perm.swap(k, p);
        }
        let alpha_sq: T = (k..m).map(|i| r[(i, k)] * r[(i, k)]).sum();
        let alpha_norm = alpha_sq.sqrt();
        if k == 0 {
            r00 = alpha_norm;
        }
        if !(alpha_norm > tol * r00) || alpha_norm == T::zero() {
            break;
        }
        let alpha = if r[(k, k)] > T::zero() { -alpha_norm } else { alpha_norm };
        let mut v: Vec<T> = (k..m).map(|i| r[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm_sq = norm_sq(&v);
        if vnorm_sq > T::zero() {
            let two = T::lit(2.0);
            for j in k..n {
                let s: T = (k..m).map(|i| v[i - k] * r[(i, j)]).sum();
                let f = two * s / vnorm_sq;
                for i in k..m {
                    r[(i, j)] -= f * v[i - k];
                }
            }
            let s: T = (k..m).map(|i| v[i - k] * qtb[i]).sum();
            let f = two * s / vnorm_sq;
            for i in k..m {
                qtb[i] -= f * v[i - k];
            }
        }
        rank += 1;
        for j in k + 1..n {
            col_norms[j] = (k + 1..m).map(|i| r[(i, j)] * r[(i, j)]).sum();
        }
    }

    let mut z = vec![T::zero(); n];
    for k in (0..rank).rev() {
        let mut s = qtb[k];
        for j in k + 1..rank {
            s -= r[(k, j)] * z[j];
        }
        z[k] = s / r[(k, k)];
    }
    let mut x = vec![T::zero(); n];
    for (k, &pk) in perm.iter().enumerate() {
        x[pk] = z[k];
    }
    Ok(LstsqSolution { x, rank })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_matches_known_system() {
        let a = Matrix::from_rows(&[
            vec![0.0, 2.0, 1.0],
            vec![1.0, 1.0, 0.0],
            vec![3.0, 0.0, 1.0],
        ]);
        let x_true = [1.0f64, -2.0, 0.5];
        let b = a.mul_vec(&x_true);
        let x = solve(&a, &b).unwrap();
        for (u, v) in x.iter().zip(x_true) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn solve_rejects_singular() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(matches!(solve(&a, &[1.0, 2.0]), Err(CrfError::Singular)));
    }

    #[test]
    fn lstsq_fits_line_and_reports_rank() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x, 1.0]).collect();
        let a = Matrix::from_rows(&rows);
        let b: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let sol = lstsq(&a, &b).unwrap();
        assert_eq!(sol.rank, 2);
        assert!((sol.x[0] - 2.0).abs() < 1e-12 && (sol.x[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn lstsq_handles_duplicate_columns() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, i as f64, 1.0]).collect();
        let a = Matrix::from_rows(&rows);
        let b: Vec<f64> = (0..5).map(|i| 3.0 * i as f64 + 1.0).collect();
        let sol = lstsq(&a, &b).unwrap();
        assert_eq!(sol.rank, 2);
        let fit = a.mul_vec(&sol.x);
        for (f, y) in fit.iter().zip(&b) {
            assert!((f - y).abs() < 1e-10);
        }
    }

    #[test]
    fn lstsq_matches_normal_equations_on_overdetermined_system() {
        let rows: Vec<Vec<f64>> = (0..7)
            .map(|i| {
                let t = i as f64 / 6.0;
                vec![1.0, t, t * t]
            })
            .collect();
        let a = Matrix::from_rows(&rows);
        let b: Vec<f64> = (0..7).map(|i| ((i * 37 % 11) as f64).sin()).collect();
        let qr = lstsq(&a, &b).unwrap().x;
        let ne = solve(&a.gram(), &a.t_mul_vec(&b)).unwrap();
        for (u, v) in qr.iter().zip(&ne) {
            assert!((u - v).abs() < 1e-9);
        }
    }
}
