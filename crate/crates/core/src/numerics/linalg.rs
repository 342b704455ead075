use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;
use num_traits::Zero;

use crate::{Error, Result};

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex64::new(1.0, 0.0);
        }
        m
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

    /// Builds a matrix from row-major data. Panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "data length does not match shape");
        Self { rows, cols, data }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.data[k * other.cols + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, v.len(), "vector length differs from column count");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `self * self^H`, the Gram matrix of the rows.
    pub fn gram(&self) -> Self {
        let mut g = Self::zeros(self.rows, self.rows);
        for i in 0..self.rows {
            for j in i..self.rows {
                let v = dot_conj(self.row(i), self.row(j));
                g[(i, j)] = v;
                g[(j, i)] = v.conj();
            }
        }
        for i in 0..self.rows {
            g[(i, i)].im = 0.0;
        }
        g
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn scale(&self, s: f64) -> Self {
        let data = self.data.iter().map(|a| a * s).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute deviation from conjugate symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        if self.rows != self.cols {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Plain bilinear product `Σ a_i b_i`.
pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `Σ a_i conj(b_i)`.
pub(crate) fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// Solves the dense real system `a x = b` (`a` row-major `n × n`) by
/// Gaussian elimination with partial pivoting. `None` if singular.
pub(crate) fn solve_real(mut a: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n * n);
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if !(a[piv * n + col].abs() > 0.0) {
            return None;
        }
        if piv != col {
            for j in 0..n {
                a.swap(piv * n + j, col * n + j);
            }
            b.swap(piv, col);
        }
        for i in col + 1..n {
            let f = a[i * n + col] / a[col * n + col];
            if f != 0.0 {
                for j in col..n {
                    a[i * n + j] -= f * a[col * n + j];
                }
                b[i] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let tail: f64 = (i + 1..n).map(|j| a[i * n + j] * x[j]).sum();
        x[i] = (b[i] - tail) / a[i * n + i];
    }
    Some(x)
}

/// Eigenvalues in descending order with matching orthonormal eigenvector
/// columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl EigenDecomposition {
    pub fn vector(&self, j: usize) -> Vec<Complex64> {
        self.vectors.column(j)
    }

    /// `V diag(f(λ)) V^H`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let mut out = CMatrix::zeros(n, n);
        for (k, &lam) in self.values.iter().enumerate() {
            let s = f(lam);
            if s == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[(i, k)] * s;
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

const MAX_SWEEPS: usize = 80;

/// Eigen-decomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
pub fn hermitian_eig(m: &CMatrix) -> Result<EigenDecomposition> {
    let n = m.rows();
    if n == 0 || m.cols() != n {
        return Err(Error::InvalidInput("hermitian_eig needs a non-empty square matrix"));
    }
    let scale = m.frobenius_norm();
    if !scale.is_finite() {
        return Err(Error::InvalidInput("matrix has non-finite entries"));
    }
    if m.hermitian_defect() > 1e-10 * scale.max(1e-300) {
        return Err(Error::InvalidInput("matrix is not Hermitian"));
    }

    let mut a = m.clone();
    for i in 0..n {
        a[(i, i)].im = 0.0;
    }
    let mut v = CMatrix::identity(n);
    if scale == 0.0 {
        return Ok(EigenDecomposition { values: vec![0.0; n], vectors: v });
    }

    let target = (1e-15 * scale).powi(2);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += 2.0 * a[(p, q)].norm_sqr();
            }
        }
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        return Err(Error::Convergence { what: "hermitian_eig", iterations: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok(EigenDecomposition { values, vectors })
}

/// One Jacobi rotation annihilating `a[p][q]`; accumulates into `v`.
fn rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r < 1e-300 {
        return;
    }
    let phase = apq / r;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let theta = (aqq - app) / (2.0 * r);
    let t =
        if theta.abs() > 1e150 { 0.5 / theta } else { theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt()) };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // U = diag(1, conj(phase)) * [[c, s], [-s, c]] on the (p, q) plane.
    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(s, 0.0);
    let u_qp = phase.conj() * (-s);
    let u_qq = phase.conj() * c;

    let n = a.rows();
    // A <- A U
    for i in 0..n {
        let aip = a[(i, p)];
        let aiq = a[(i, q)];
        a[(i, p)] = aip * u_pp + aiq * u_qp;
        a[(i, q)] = aip * u_pq + aiq * u_qq;
    }
    // A <- U^H A
    for j in 0..n {
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        a[(p, j)] = u_pp.conj() * apj + u_qp.conj() * aqj;
        a[(q, j)] = u_pq.conj() * apj + u_qq.conj() * aqj;
    }
    a[(p, q)] = Complex64::zero();
    a[(q, p)] = Complex64::zero();
    a[(p, p)].im = 0.0;
    a[(q, q)].im = 0.0;
    // V <- V U
    for i in 0..n {
        let vip = v[(i, p)];
        let viq = v[(i, q)];
        v[(i, p)] = vip * u_pp + viq * u_qp;
        v[(i, q)] = vip * u_pq + viq * u_qq;
    }
}

/// Principal square root of a positive semidefinite Hermitian matrix.
///
/// Eigenvalues down to `-1e-8 * ||M||` are clamped to zero; anything more
/// negative is rejected.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let eig = hermitian_eig(m)?;
    let norm = eig.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -1e-8 * norm {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    let mut root = eig.reconstruct_with(|lam| lam.max(0.0).sqrt());
    let n = root.rows();
    for i in 0..n {
        root[(i, i)].im = 0.0;
        for j in i + 1..n {
            let avg = (root[(i, j)] + root[(j, i)].conj()) * 0.5;
            root[(i, j)] = avg;
            root[(j, i)] = avg.conj();
        }
    }
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn real_solve_with_pivoting() {
        let x = solve_real(vec![0.0, 2.0, 1.0, 1.0], vec![4.0, 3.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
        assert!(solve_real(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 1.0]).is_none());
    }

    #[test]
    fn identity_eigenvalues() {
        let eig = hermitian_eig(&CMatrix::identity(3)).unwrap();
        assert_eq!(eig.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn diagonal_sorted_descending() {
        let eig = hermitian_eig(&CMatrix::from_real_diagonal(&[1.0, 3.0])).unwrap();
        assert_eq!(eig.values, vec![3.0, 1.0]);
        assert!((eig.vectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
        assert!((eig.vectors[(0, 1)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_complex() {
        // [[2, i], [-i, 2]] has eigenvalues 3 and 1
        let m = CMatrix::from_row_major(2, 2, vec![c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let eig = hermitian_eig(&m).unwrap();
        assert!((eig.values[0] - 3.0).abs() < 1e-14);
        assert!((eig.values[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = CMatrix::from_row_major(2, 2, vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
        assert!(hermitian_eig(&m).is_err());
    }

    #[test]
    fn sqrt_of_diagonal() {
        let r = psd_sqrt(&CMatrix::from_real_diagonal(&[4.0, 9.0])).unwrap();
        assert!((r[(0, 0)].re - 2.0).abs() < 1e-14);
        assert!((r[(1, 1)].re - 3.0).abs() < 1e-14);
        assert!(r[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn sqrt_rejects_indefinite() {
        let m = CMatrix::from_real_diagonal(&[1.0, -0.5]);
        assert!(matches!(psd_sqrt(&m), Err(Error::NotPsd { .. })));
        // tiny negative eigenvalue is clamped
        let m = CMatrix::from_real_diagonal(&[1.0, -1e-12]);
        assert!(psd_sqrt(&m).is_ok());
    }
}
