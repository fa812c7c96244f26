//! Square complex matrices and vectors backed by flat row-major storage.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use super::LinalgError;
use crate::scalar::{fromf, Scalar};

/// Dense complex vector.
#[derive(Debug, Clone, PartialEq)]
pub struct CVector<T: Scalar> {
    data: Vec<Complex<T>>,
}

impl<T: Scalar> CVector<T> {
    pub fn new(data: Vec<Complex<T>>) -> Self {
        Self { data }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            data: vec![Complex::zero(); n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> Complex<T>) -> Self {
        Self {
            data: (0..n).map(|i| f(i)).collect(),
        }
    }

    /// Real vector promoted to complex.
    pub fn from_real(xs: &[T]) -> Self {
        Self {
            data: xs.iter().map(|&x| Complex::new(x, T::zero())).collect(),
        }
    }

    /// Standard basis vector `e_k`.
    pub fn basis(n: usize, k: usize) -> Self {
        let mut v = Self::zeros(n);
        v.data[k] = Complex::one();
        v
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    /// Inner product, conjugate-linear in `self` (physics convention).
    pub fn dot(&self, other: &Self) -> Complex<T> {
        debug_assert_eq!(self.len(), other.len());
        self.data
            .iter()
            .zip(&other.data)
            .fold(Complex::zero(), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn norm_sqr(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self {
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn scale_re(&self, t: T) -> Self {
        self.scale(Complex::new(t, T::zero()))
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: Complex<T>, other: &Self) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Self {
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        if n.is_zero() {
            self.clone()
        } else {
            self.scale_re(T::one() / n)
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl<T: Scalar> Index<usize> for CVector<T> {
    type Output = Complex<T>;
    fn index(&self, i: usize) -> &Complex<T> {
        &self.data[i]
    }
}

impl<T: Scalar> IndexMut<usize> for CVector<T> {
    fn index_mut(&mut self, i: usize) -> &mut Complex<T> {
        &mut self.data[i]
    }
}

impl<T: Scalar> Add for &CVector<T> {
    type Output = CVector<T>;
    fn add(self, rhs: Self) -> CVector<T> {
        self.axpy(Complex::one(), rhs)
    }
}

impl<T: Scalar> Sub for &CVector<T> {
    type Output = CVector<T>;
    fn sub(self, rhs: Self) -> CVector<T> {
        self.axpy(-Complex::<T>::one(), rhs)
    }
}

impl<T: Scalar> Neg for &CVector<T> {
    type Output = CVector<T>;
    fn neg(self) -> CVector<T> {
        self.scale(-Complex::<T>::one())
    }
}

/// Dense square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix<T: Scalar> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> CMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from nested rows; panics if the rows are not square.
    pub fn from_rows(rows: &[Vec<Complex<T>>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "rows must be square");
        Self::from_fn(dim, |i, j| rows[i][j])
    }

    /// Real matrix promoted to complex.
    pub fn from_real_rows(rows: &[Vec<T>]) -> Self {
        let dim = rows.len();
        assert!(rows.iter().all(|r| r.len() == dim), "rows must be square");
        Self::from_fn(dim, |i, j| Complex::new(rows[i][j], T::zero()))
    }

    pub fn diag(values: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Rank-one matrix `u v^*`.
    pub fn outer(u: &CVector<T>, v: &CVector<T>) -> Self {
        Self::from_fn(u.len(), |i, j| u[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column(&self, j: usize) -> CVector<T> {
        CVector::from_fn(self.dim, |i| self[(i, j)])
    }

    pub fn set_column(&mut self, j: usize, v: &CVector<T>) {
        for i in 0..self.dim {
            self[(i, j)] = v[i];
        }
    }

    pub fn from_columns(cols: &[CVector<T>]) -> Self {
        let dim = cols.len();
        assert!(cols.iter().all(|c| c.len() == dim));
        Self::from_fn(dim, |i, j| cols[j][i])
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(Complex::zero(), |acc, i| acc + self[(i, i)])
    }

    pub fn scale(&self, c: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * c).collect(),
        }
    }

    pub fn scale_re(&self, t: T) -> Self {
        self.scale(Complex::new(t, T::zero()))
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: Complex<T>, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + c * b)
                .collect(),
        }
    }

    pub fn mul_mat(&self, rhs: &Self) -> Self {
        debug_assert_eq!(self.dim, rhs.dim);
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * rhs.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &CVector<T>) -> CVector<T> {
        debug_assert_eq!(self.dim, v.len());
        let n = self.dim;
        CVector::from_fn(n, |i| {
            let mut acc = Complex::zero();
            for j in 0..n {
                acc = acc + self.data[i * n + j] * v[j];
            }
            acc
        })
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc + z.norm_sqr())
            .sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        let n = self.dim;
        (0..n)
            .map(|j| (0..n).fold(T::zero(), |acc, i| acc + self[(i, j)].norm()))
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        let n = self.dim;
        for i in 0..n {
            for j in i..n {
                if (self[(i, j)] - self[(j, i)].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Hermitian part `(A + A^*) / 2`.
    pub fn hermitian_part(&self) -> Self {
        let at = self.adjoint();
        self.axpy(Complex::one(), &at).scale_re(fromf(0.5))
    }

    /// Operator 2-norm via the largest eigenvalue of `A^* A`.
    pub fn op_norm(&self) -> T {
        let gram = self.adjoint().mul_mat(self);
        let (vals, _) = super::eig::eigh(&gram).expect("Gram matrix is Hermitian PSD");
        vals.last().copied().unwrap_or(T::zero()).max(T::zero()).sqrt()
    }

    /// LU factorization with partial pivoting; returns (LU, pivot rows).
    fn lu_factor(&self) -> Result<(Vec<Complex<T>>, Vec<usize>), LinalgError> {
        let n = self.dim;
        let mut lu = self.data.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].norm();
            for i in (k + 1)..n {
                let mag = lu[i * n + k].norm();
                if mag > best {
                    best = mag;
                    p = i;
                }
            }
            if best.is_zero() || !best.is_finite() {
                return Err(LinalgError::Singular);
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                piv.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in (k + 1)..n {
                let factor = lu[i * n + k] / pivot;
                lu[i * n + k] = factor;
                for j in (k + 1)..n {
                    lu[i * n + j] = lu[i * n + j] - factor * lu[k * n + j];
                }
            }
        }
        Ok((lu, piv))
    }

    /// Solve `A x = b`.
    pub fn solve_vec(&self, b: &CVector<T>) -> Result<CVector<T>, LinalgError> {
        if b.len() != self.dim {
            return Err(LinalgError::DimensionMismatch(self.dim, b.len()));
        }
        let (lu, piv) = self.lu_factor()?;
        Ok(lu_substitute(&lu, &piv, self.dim, b))
    }

    /// Solve `A X = B` column by column.
    pub fn solve_mat(&self, b: &Self) -> Result<Self, LinalgError> {
        let (lu, piv) = self.lu_factor()?;
        let mut out = Self::zeros(self.dim);
        for j in 0..self.dim {
            let col = lu_substitute(&lu, &piv, self.dim, &b.column(j));
            out.set_column(j, &col);
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<Self, LinalgError> {
        self.solve_mat(&Self::identity(self.dim))
    }

    /// Frobenius condition estimate `|A|_F |A^-1|_F`.
    pub fn cond_fro(&self) -> Result<T, LinalgError> {
        Ok(self.frobenius_norm() * self.inverse()?.frobenius_norm())
    }

    /// Matrix exponential by scaling and squaring with a diagonal [6/6] Pade
    /// approximant. Diagonal Pade maps anti-Hermitian arguments to exactly
    /// unitary results (up to the linear solve), which the dephasing
    /// application relies on.
    pub fn expm(&self) -> Self {
        let n = self.dim;
        let norm = self.norm_one();
        let theta = fromf::<T>(0.25);
        let mut squarings = 0u32;
        let mut a = self.clone();
        if norm > theta {
            let ratio = (norm / theta).log2().ceil();
            squarings = ratio.to_u32().unwrap_or(60).min(60);
            a = a.scale_re(T::one() / fromf::<T>(2f64.powi(squarings as i32)));
        }

        // [6/6] Pade coefficients c_k = (2q-k)! q! / ((2q)! k! (q-k)!), q = 6.
        let coeff: [f64; 7] = [
            1.0,
            0.5,
            5.0 / 44.0,
            1.0 / 66.0,
            1.0 / 792.0,
            1.0 / 15840.0,
            1.0 / 665280.0,
        ];
        let mut term = Self::identity(n);
        let mut p = Self::zeros(n); // sum of even/odd split below
        let mut q = Self::zeros(n);
        for (k, &c) in coeff.iter().enumerate() {
            let ck = Complex::new(fromf::<T>(c), T::zero());
            p = p.axpy(ck, &term);
            let sign = if k % 2 == 0 { T::one() } else { -T::one() };
            q = q.axpy(ck * Complex::new(sign, T::zero()), &term);
            if k < coeff.len() - 1 {
                term = term.mul_mat(&a);
            }
        }
        let mut result = q.solve_mat(&p).unwrap_or_else(|_| {
            // Fall back to a plain truncated series if the Pade solve is
            // singular (only reachable for non-finite input).
            let mut acc = Self::identity(n);
            let mut t = Self::identity(n);
            for k in 1..16 {
                t = t.mul_mat(&a).scale_re(T::one() / fromf::<T>(k as f64));
                acc = acc.axpy(Complex::one(), &t);
            }
            acc
        });
        for _ in 0..squarings {
            result = result.mul_mat(&result);
        }
        result
    }
}

/// Allocation-free kernels for trajectory-stepping hot loops. Output
/// arguments must not alias the inputs.
impl<T: Scalar> CMatrix<T> {
    pub fn copy_from(&mut self, other: &Self) {
        debug_assert_eq!(self.dim, other.dim);
        self.data.copy_from_slice(&other.data);
    }

    /// `out = self * rhs`.
    pub fn mul_into(&self, rhs: &Self, out: &mut Self) {
        let n = self.dim;
        debug_assert_eq!(rhs.dim, n);
        debug_assert_eq!(out.dim, n);
        for x in out.data.iter_mut() {
            *x = Complex::zero();
        }
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * rhs.data[k * n + j];
                }
            }
        }
    }

    /// `out = self * v`.
    pub fn mul_vec_into(&self, v: &CVector<T>, out: &mut CVector<T>) {
        let n = self.dim;
        let vs = v.as_slice();
        let os = out.as_mut_slice();
        for i in 0..n {
            let mut acc = Complex::zero();
            for j in 0..n {
                acc = acc + self.data[i * n + j] * vs[j];
            }
            os[i] = acc;
        }
    }

    /// `out = self^*`.
    pub fn adjoint_into(&self, out: &mut Self) {
        let n = self.dim;
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
    }

    /// `self = a + c * b`.
    pub fn set_axpy(&mut self, a: &Self, c: Complex<T>, b: &Self) {
        for ((x, &ai), &bi) in self.data.iter_mut().zip(&a.data).zip(&b.data) {
            *x = ai + c * bi;
        }
    }
}

impl<T: Scalar> CVector<T> {
    pub fn copy_from(&mut self, other: &Self) {
        self.as_mut_slice().copy_from_slice(other.as_slice());
    }

    /// `self += c * other`.
    pub fn axpy_assign(&mut self, c: Complex<T>, other: &Self) {
        for (x, &o) in self.as_mut_slice().iter_mut().zip(other.as_slice()) {
            *x = *x + c * o;
        }
    }

    pub fn fill_zero(&mut self) {
        for x in self.as_mut_slice() {
            *x = Complex::zero();
        }
    }
}

fn lu_substitute<T: Scalar>(
    lu: &[Complex<T>],
    piv: &[usize],
    n: usize,
    b: &CVector<T>,
) -> CVector<T> {
    let mut x: Vec<Complex<T>> = piv.iter().map(|&p| b[p]).collect();
    for i in 1..n {
        for j in 0..i {
            let f = lu[i * n + j] * x[j];
            x[i] = x[i] - f;
        }
    }
    for i in (0..n).rev() {
        for j in (i + 1)..n {
            let f = lu[i * n + j] * x[j];
            x[i] = x[i] - f;
        }
        x[i] = x[i] / lu[i * n + i];
    }
    CVector::new(x)
}

impl<T: Scalar> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        &self.data[i * self.dim + j]
    }
}

impl<T: Scalar> IndexMut<(usize, usize)> for CMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[i * self.dim + j]
    }
}

impl<T: Scalar> Add for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn add(self, rhs: Self) -> CMatrix<T> {
        self.axpy(Complex::one(), rhs)
    }
}

impl<T: Scalar> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn sub(self, rhs: Self) -> CMatrix<T> {
        self.axpy(-Complex::<T>::one(), rhs)
    }
}

impl<T: Scalar> Neg for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn neg(self) -> CMatrix<T> {
        self.scale(-Complex::<T>::one())
    }
}

impl<T: Scalar> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn mul(self, rhs: Self) -> CMatrix<T> {
        self.mul_mat(rhs)
    }
}

impl<T: Scalar> Mul<&CVector<T>> for &CMatrix<T> {
    type Output = CVector<T>;
    fn mul(self, rhs: &CVector<T>) -> CVector<T> {
        self.mul_vec(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn mul_and_solve_roundtrip() {
        let a = CMatrix::from_rows(&[
            vec![c(2.0, 1.0), c(0.0, -1.0), c(1.0, 0.0)],
            vec![c(0.5, 0.0), c(3.0, 0.0), c(0.0, 2.0)],
            vec![c(1.0, -1.0), c(0.0, 0.0), c(4.0, 0.5)],
        ]);
        let x = CVector::new(vec![c(1.0, 2.0), c(-0.5, 0.25), c(0.0, -3.0)]);
        let b = a.mul_vec(&x);
        let x2 = a.solve_vec(&b).unwrap();
        assert!((&x2 - &x).norm() < 1e-12);
    }

    #[test]
    fn inverse_identity() {
        let a = CMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 1.0)],
            vec![c(0.0, -1.0), c(1.5, 0.0)],
        ]);
        let inv = a.inverse().unwrap();
        let id = a.mul_mat(&inv);
        assert!((&id - &CMatrix::identity(2)).frobenius_norm() < 1e-13);
    }

    #[test]
    fn singular_solve_fails() {
        let a = CMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 0.0)],
            vec![c(2.0, 0.0), c(4.0, 0.0)],
        ]);
        assert!(matches!(
            a.solve_vec(&CVector::basis(2, 0)),
            Err(LinalgError::Singular)
        ));
    }

    #[test]
    fn expm_diagonal() {
        let a = CMatrix::diag(&[c(0.3, 1.2), c(-2.0, 0.0)]);
        let e = a.expm();
        assert!((e[(0, 0)] - c(0.3, 1.2).exp()).norm() < 1e-14);
        assert!((e[(1, 1)] - c(-2.0, 0.0).exp()).norm() < 1e-14);
        assert!(e[(0, 1)].norm() < 1e-15);
    }

    #[test]
    fn expm_antihermitian_is_unitary() {
        // exp of -i * Hermitian must be unitary even for largish norms.
        let h = CMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(2.0, 3.0)],
            vec![c(2.0, -3.0), c(-4.0, 0.0)],
        ]);
        let g = h.scale(c(0.0, -1.0)).scale_re(7.3);
        let u = g.expm();
        let delta = (&u.adjoint().mul_mat(&u) - &CMatrix::identity(2)).frobenius_norm();
        assert!(delta < 1e-12, "unitarity defect {delta}");
    }

    #[test]
    fn expm_matches_series_small() {
        let a = CMatrix::from_rows(&[
            vec![c(0.01, 0.02), c(0.03, 0.0)],
            vec![c(0.0, -0.01), c(-0.02, 0.01)],
        ]);
        let mut series = CMatrix::identity(2);
        let mut term = CMatrix::identity(2);
        for k in 1..20 {
            term = term.mul_mat(&a).scale_re(1.0 / k as f64);
            series = series.axpy(C64::new(1.0, 0.0), &term);
        }
        assert!((&a.expm() - &series).frobenius_norm() < 1e-15);
    }

    #[test]
    fn op_norm_of_scaled_unitary() {
        let th = 0.7f64;
        let u = CMatrix::from_rows(&[
            vec![c(th.cos(), 0.0), c(-th.sin(), 0.0)],
            vec![c(th.sin(), 0.0), c(th.cos(), 0.0)],
        ]);
        assert!((u.op_norm() - 1.0).abs() < 1e-12);
        assert!((u.scale_re(2.5).op_norm() - 2.5).abs() < 1e-11);
    }
}
