//! The oblique projection on `ker L1` along `ran L1`, and the reduced
//! inverse of `L1` on its range. These realize the splitting
//! `B = ker L1 + ran L1` that the gap condition guarantees.

use num_complex::Complex;
use num_traits::One;

use super::eig::spectral_decompose_default;
use super::matrix::{CMatrix, CVector};
use super::LinalgError;
use crate::scalar::{fromf, Scalar};

/// Relative tolerance for membership of `v` in `ran L1`.
const RANGE_TOL: f64 = 1e-8;

/// Eigenvalues below `gap_tol * ZERO_FRACTION` count as the kernel group;
/// anything between that and `gap_tol` violates the gap.
const ZERO_FRACTION: f64 = 1e-3;

/// Shared kernel/range splitting of a gapped matrix: the projection and the
/// reduced inverse both come from one spectral decomposition.
#[derive(Debug, Clone)]
pub struct KernelSplit<T: Scalar> {
    projection: CMatrix<T>,
    vmat: CMatrix<T>,
    winv: CMatrix<T>,
    eigenvalues: Vec<Complex<T>>,
    kernel: Vec<bool>,
}

impl<T: Scalar> KernelSplit<T> {
    pub fn new(l1: &CMatrix<T>, gap_tol: T) -> Result<Self, LinalgError> {
        let sd = spectral_decompose_default(l1)?;
        let n = l1.dim();
        let zero_tol = gap_tol * fromf::<T>(ZERO_FRACTION);
        let kernel: Vec<bool> = sd
            .eigenvalues
            .iter()
            .map(|l| l.norm() <= zero_tol)
            .collect();
        if !kernel.iter().any(|&k| k) {
            return Err(LinalgError::GapViolation(
                "no eigenvalue at 0 within gap_tol".into(),
            ));
        }
        for (k, l) in sd.eigenvalues.iter().enumerate() {
            if !kernel[k] && l.norm() <= gap_tol {
                return Err(LinalgError::GapViolation(format!(
                    "eigenvalue of magnitude {:.3e} inside the gap",
                    l.norm().to_f64().unwrap_or(f64::NAN)
                )));
            }
        }

        let vmat = sd.vector_matrix();
        let winv = vmat.inverse().map_err(|_| LinalgError::DefectiveMatrix {
            cond: f64::INFINITY,
        })?;
        let mut selector = CMatrix::zeros(n);
        for (k, &in_kernel) in kernel.iter().enumerate() {
            if in_kernel {
                selector[(k, k)] = Complex::one();
            }
        }
        let mut p = vmat.mul_mat(&selector).mul_mat(&winv);

        // Idempotency polish: P <- 3P^2 - 2P^3 contracts toward the nearby
        // projection with the same invariant subspaces.
        for _ in 0..2 {
            let p2 = p.mul_mat(&p);
            let defect = (&p2 - &p).frobenius_norm();
            if defect <= fromf::<T>(64.0) * T::epsilon() {
                break;
            }
            let p3 = p2.mul_mat(&p);
            p = p2
                .scale_re(fromf::<T>(3.0))
                .axpy(Complex::new(fromf::<T>(-2.0), T::zero()), &p3);
        }

        Ok(Self {
            projection: p,
            vmat,
            winv,
            eigenvalues: sd.eigenvalues,
            kernel,
        })
    }

    /// Projection on `ker L1` along `ran L1`.
    pub fn projection(&self) -> &CMatrix<T> {
        &self.projection
    }

    /// Complementary projection `I - P` on `ran L1`.
    pub fn complement(&self) -> CMatrix<T> {
        CMatrix::identity(self.projection.dim())
            .axpy(-Complex::<T>::one(), &self.projection)
    }

    pub fn kernel_rank(&self) -> usize {
        self.kernel.iter().filter(|&&k| k).count()
    }

    /// Solve `L1 w = v` on `ran L1`; `v` must lie in the range up to the
    /// relative tolerance.
    pub fn solve_on_range(&self, v: &CVector<T>) -> Result<CVector<T>, LinalgError> {
        let n = v.len();
        if n != self.projection.dim() {
            return Err(LinalgError::DimensionMismatch(self.projection.dim(), n));
        }
        let vnorm = v.norm();
        if vnorm.is_zero() {
            return Ok(CVector::zeros(n));
        }
        let coords = self.winv.mul_vec(v);
        let mut kernel_mass = T::zero();
        let mut w_coords = CVector::zeros(n);
        for k in 0..n {
            if self.kernel[k] {
                kernel_mass = kernel_mass + coords[k].norm_sqr();
            } else {
                w_coords[k] = coords[k] / self.eigenvalues[k];
            }
        }
        let overlap = kernel_mass.sqrt() / vnorm;
        let tol = fromf::<T>(RANGE_TOL);
        if overlap > tol {
            return Err(LinalgError::NotInRange {
                overlap: overlap.to_f64().unwrap_or(f64::NAN),
                tol: RANGE_TOL,
            });
        }
        Ok(self.vmat.mul_vec(&w_coords))
    }
}

/// Projection on `ker L1` along `ran L1`.
///
/// Requires `0` to be an eigenvalue of `L1` isolated from the rest of the
/// spectrum by more than `gap_tol`. Built from the eigenbasis: columns
/// spanning the kernel times the dual rows from the inverse eigenvector
/// matrix.
pub fn kernel_projection<T: Scalar>(
    l1: &CMatrix<T>,
    gap_tol: T,
) -> Result<CMatrix<T>, LinalgError> {
    Ok(KernelSplit::new(l1, gap_tol)?.projection().clone())
}

/// Solve `L1 w = v` with `w` in `ran L1`, for `v` in `ran L1`.
///
/// The inverse is taken on the range only; uniqueness follows from the
/// kernel/range splitting. Fails with [`LinalgError::NotInRange`] when the
/// kernel component of `v` is not negligible.
pub fn reduced_inverse<T: Scalar>(
    l1: &CMatrix<T>,
    v: &CVector<T>,
    gap_tol: T,
) -> Result<CVector<T>, LinalgError> {
    KernelSplit::new(l1, gap_tol)?.solve_on_range(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn orthogonal_kernel_projection() {
        let l1 = CMatrix::diag(&[c(0.0, 0.0), c(-1.0, 0.0)]);
        let p = kernel_projection(&l1, 1e-6).unwrap();
        let expect = CMatrix::diag(&[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!((&p - &expect).frobenius_norm() < 1e-13);
    }

    #[test]
    fn invertible_matrix_has_no_kernel() {
        let l1 = CMatrix::diag(&[c(-1.0, 0.0), c(-2.0, 0.0)]);
        assert!(matches!(
            kernel_projection(&l1, 1e-6),
            Err(LinalgError::GapViolation(_))
        ));
    }

    #[test]
    fn eigenvalue_inside_gap_is_rejected() {
        let l1 = CMatrix::diag(&[c(0.0, 0.0), c(1e-8, 0.0)]);
        assert!(matches!(
            kernel_projection(&l1, 1e-6),
            Err(LinalgError::GapViolation(_))
        ));
    }

    #[test]
    fn oblique_projection_frozen_case() {
        // Oracle: kernel basis (1,0), range basis (1,-1); solving
        // P(1,0)=(1,0), P(1,-1)=0 gives P = [[1,1],[0,0]]. Verified by
        // direct multiplication below.
        let l1 = CMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]]);
        let p = kernel_projection(&l1, 1e-6).unwrap();
        let expect =
            CMatrix::from_rows(&[vec![c(1.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)]]);
        assert!((&p - &expect).frobenius_norm() < 1e-12);
        assert!((&p.mul_mat(&p) - &p).frobenius_norm() < 1e-12);
        assert!(p.mul_mat(&l1).frobenius_norm() < 1e-12);
        assert!(l1.mul_mat(&p).frobenius_norm() < 1e-12);
    }

    #[test]
    fn reduced_inverse_diagonal() {
        let l1 = CMatrix::diag(&[c(0.0, 0.0), c(-1.0, 0.0)]);
        let v = CVector::new(vec![c(0.0, 0.0), c(1.0, 0.0)]);
        let w = reduced_inverse(&l1, &v, 1e-6).unwrap();
        assert!((w[0]).norm() < 1e-13);
        assert!((w[1] - c(-1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn reduced_inverse_zero_vector() {
        let l1 = CMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]]);
        let w = reduced_inverse(&l1, &CVector::zeros(2), 1e-6).unwrap();
        assert_eq!(w.norm(), 0.0);
    }

    #[test]
    fn reduced_inverse_oblique_frozen_case() {
        // Oracle: least-squares on the range subspace with the kernel
        // projected out. v = (1,-1) lies in ran L1; w must satisfy
        // L1 w = v with P w = 0, namely w = (-1, 1).
        let l1 = CMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]]);
        let v = CVector::new(vec![c(1.0, 0.0), c(-1.0, 0.0)]);
        let w = reduced_inverse(&l1, &v, 1e-6).unwrap();
        assert!((w[0] - c(-1.0, 0.0)).norm() < 1e-12);
        assert!((w[1] - c(1.0, 0.0)).norm() < 1e-12);
        let lw = l1.mul_vec(&w);
        assert!((&lw - &v).norm() < 1e-12);
        let p = kernel_projection(&l1, 1e-6).unwrap();
        assert!(p.mul_vec(&w).norm() < 1e-12);
    }

    #[test]
    fn reduced_inverse_rejects_kernel_component() {
        let l1 = CMatrix::diag(&[c(0.0, 0.0), c(-1.0, 0.0)]);
        let v = CVector::new(vec![c(0.5, 0.0), c(1.0, 0.0)]);
        assert!(matches!(
            reduced_inverse(&l1, &v, 1e-6),
            Err(LinalgError::NotInRange { .. })
        ));
    }

    #[test]
    fn split_complement_sums_to_identity() {
        let l1 = CMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(0.0, 0.0), c(-1.0, 0.0)]]);
        let split = KernelSplit::new(&l1, 1e-6).unwrap();
        assert_eq!(split.kernel_rank(), 1);
        let sum = split.projection() + &split.complement();
        assert!((&sum - &CMatrix::identity(2)).frobenius_norm() < 1e-13);
    }
}
