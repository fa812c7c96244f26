//! Eigensolvers: shifted QR iteration for general complex matrices and
//! cyclic Jacobi for Hermitian ones.
//!
//! `L1 = -(iH + Garmma^2/2)` is non-normal in general, so the projection
//! machinery needs the general solver; the dephasing application needs a
//! high-quality orthonormal Hermitian eigenbasis, which Jacobi delivers.

use num_complex::Complex;
use num_traits::{One, Zero};

use super::matrix::{CMatrix, CVector};
use super::{LinalgError, MAX_DIM};
use crate::scalar::{fromf, Scalar};

/// Condition-number threshold above which an eigenbasis is declared
/// defective.
const COND_LIMIT: f64 = 1e12;

/// Right eigenpairs of a general complex matrix.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition<T: Scalar> {
    /// Eigenvalues sorted ascending lexicographically on `(Re, Im)`.
    pub eigenvalues: Vec<Complex<T>>,
    /// Unit right eigenvectors, matching the eigenvalue order.
    pub right_eigenvectors: Vec<CVector<T>>,
    /// Frobenius condition estimate of the eigenvector matrix.
    pub condition_estimate: T,
}

impl<T: Scalar> SpectralDecomposition<T> {
    /// Eigenvector matrix with eigenvectors as columns.
    pub fn vector_matrix(&self) -> CMatrix<T> {
        CMatrix::from_columns(&self.right_eigenvectors)
    }
}

/// Full right eigendecomposition of a general complex matrix.
///
/// Eigenvalues are sorted ascending on `(Re, Im)`; each pair satisfies
/// `|A v - lambda v| <= tol`. Fails with [`LinalgError::DefectiveMatrix`]
/// when no eigenbasis exists to tolerance.
pub fn spectral_decompose<T: Scalar>(
    a: &CMatrix<T>,
    tol: T,
) -> Result<SpectralDecomposition<T>, LinalgError> {
    let n = a.dim();
    if n == 0 || n > MAX_DIM {
        return Err(LinalgError::DimensionTooLarge(n));
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }

    let (mut eigenvalues, mut vectors) = if n == 1 {
        (vec![a[(0, 0)]], vec![CVector::basis(1, 0)])
    } else if n == 2 {
        eig2(a)
    } else {
        let (t, q) = triangularize(a)?;
        let mut vals = Vec::with_capacity(n);
        let mut vecs = Vec::with_capacity(n);
        let scale = t.max_abs().max(T::one());
        let smallnum = scale * fromf::<T>(1e-3) * T::epsilon();
        for k in 0..n {
            let lambda = t[(k, k)];
            // Back-substitution on the upper triangular factor.
            let mut y = vec![Complex::<T>::zero(); n];
            y[k] = Complex::one();
            for i in (0..k).rev() {
                let mut rhs = Complex::<T>::zero();
                for j in (i + 1)..=k {
                    rhs = rhs + t[(i, j)] * y[j];
                }
                let mut denom = t[(i, i)] - lambda;
                if denom.norm() < smallnum {
                    denom = Complex::new(smallnum, T::zero());
                }
                y[i] = -rhs / denom;
            }
            let v = q.mul_vec(&CVector::new(y)).normalized();
            vals.push(lambda);
            vecs.push(v);
        }
        (vals, vecs)
    };

    // Sort ascending lexicographically on (Re, Im).
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (eigenvalues[i], eigenvalues[j]);
        a.re.partial_cmp(&b.re)
            .unwrap()
            .then(a.im.partial_cmp(&b.im).unwrap())
    });
    eigenvalues = order.iter().map(|&i| eigenvalues[i]).collect();
    vectors = order.iter().map(|&i| vectors[i].clone()).collect();

    let vmat = CMatrix::from_columns(&vectors);
    let condition_estimate = match vmat.cond_fro() {
        Ok(c) => c,
        Err(_) => {
            return Err(LinalgError::DefectiveMatrix {
                cond: f64::INFINITY,
            })
        }
    };
    if condition_estimate > fromf(COND_LIMIT) {
        return Err(LinalgError::DefectiveMatrix {
            cond: condition_estimate.to_f64().unwrap_or(f64::INFINITY),
        });
    }
    for (lambda, v) in eigenvalues.iter().zip(&vectors) {
        let resid = (&a.mul_vec(v) - &v.scale(*lambda)).norm();
        if resid > tol {
            return Err(LinalgError::DefectiveMatrix {
                cond: condition_estimate.to_f64().unwrap_or(f64::INFINITY),
            });
        }
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        right_eigenvectors: vectors,
        condition_estimate,
    })
}

/// `spectral_decompose` with a residual tolerance scaled to the matrix.
pub fn spectral_decompose_default<T: Scalar>(
    a: &CMatrix<T>,
) -> Result<SpectralDecomposition<T>, LinalgError> {
    let scale = a.frobenius_norm().max(T::one());
    spectral_decompose(a, scale * fromf::<T>(1e5) * T::epsilon())
}

/// Closed-form eigenpairs of a 2x2 matrix.
fn eig2<T: Scalar>(a: &CMatrix<T>) -> (Vec<Complex<T>>, Vec<CVector<T>>) {
    let (a11, a12, a21, a22) = (a[(0, 0)], a[(0, 1)], a[(1, 0)], a[(1, 1)]);
    let half = fromf::<T>(0.5);
    let mid = (a11 + a22).scale(half);
    let disc = ((a11 - a22).scale(half)).powu(2) + a12 * a21;
    let sq = disc.sqrt();
    let lambdas = [mid + sq, mid - sq];
    let scale = a.max_abs().max(T::one());
    let tiny = scale * fromf::<T>(16.0) * T::epsilon();
    let vecs = lambdas
        .iter()
        .map(|&l| {
            // Null vector of (A - l I): rows are proportional.
            let c1 = CVector::new(vec![a12, l - a11]);
            let c2 = CVector::new(vec![l - a22, a21]);
            let v = if c1.norm() >= c2.norm() { c1 } else { c2 };
            if v.norm() <= tiny {
                // Diagonal (or scalar) matrix: basis vector of the closer
                // diagonal entry.
                if (a11 - l).norm() <= (a22 - l).norm() {
                    CVector::basis(2, 0)
                } else {
                    CVector::basis(2, 1)
                }
            } else {
                v.normalized()
            }
        })
        .collect();
    (lambdas.to_vec(), vecs)
}

/// Unitary reduction to upper Hessenberg form, `A = Q H Q^*`.
fn hessenberg<T: Scalar>(a: &CMatrix<T>) -> (CMatrix<T>, CMatrix<T>) {
    let n = a.dim();
    let mut h = a.clone();
    let mut q = CMatrix::identity(n);
    for k in 0..n.saturating_sub(2) {
        // Householder vector for column k below the subdiagonal.
        let mut x = vec![Complex::<T>::zero(); n];
        let mut norm_sq = T::zero();
        for i in (k + 1)..n {
            x[i] = h[(i, k)];
            norm_sq = norm_sq + x[i].norm_sqr();
        }
        let norm = norm_sq.sqrt();
        if norm <= h.max_abs() * T::epsilon() {
            continue;
        }
        let pivot = x[k + 1];
        let phase = if pivot.norm().is_zero() {
            Complex::one()
        } else {
            pivot / Complex::new(pivot.norm(), T::zero())
        };
        let alpha = -phase * Complex::new(norm, T::zero());
        x[k + 1] = x[k + 1] - alpha;
        let vnorm = x.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()).sqrt();
        if vnorm.is_zero() {
            continue;
        }
        let v = CVector::new(
            x.into_iter()
                .map(|z| z / Complex::new(vnorm, T::zero()))
                .collect(),
        );
        // P = I - 2 v v^*
        let p = {
            let mut m = CMatrix::identity(n);
            let two = Complex::new(fromf::<T>(2.0), T::zero());
            for i in 0..n {
                for j in 0..n {
                    m[(i, j)] = m[(i, j)] - two * v[i] * v[j].conj();
                }
            }
            m
        };
        h = p.mul_mat(&h).mul_mat(&p);
        q = q.mul_mat(&p);
    }
    // Clean below the first subdiagonal.
    for i in 0..n {
        for j in 0..i.saturating_sub(1) {
            h[(i, j)] = Complex::zero();
        }
    }
    (h, q)
}

/// Shifted QR iteration on the Hessenberg form; returns `(T, Q)` with
/// `A = Q T Q^*`, `T` upper triangular.
fn triangularize<T: Scalar>(a: &CMatrix<T>) -> Result<(CMatrix<T>, CMatrix<T>), LinalgError> {
    let n = a.dim();
    let (mut h, mut q) = hessenberg(a);
    let scale = h.max_abs().max(T::one());
    let deflate_tol = scale * fromf::<T>(4.0) * T::epsilon();
    let max_iter = 60 * n;

    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut stagnation = 0usize;
    while hi > 0 {
        // Deflate converged subdiagonals from the bottom.
        let sub = h[(hi, hi - 1)].norm();
        if sub <= deflate_tol * (h[(hi, hi)].norm() + h[(hi - 1, hi - 1)].norm()).max(T::one()) {
            h[(hi, hi - 1)] = Complex::zero();
            hi -= 1;
            stagnation = 0;
            continue;
        }
        if iter >= max_iter {
            return Err(LinalgError::NoConvergence(max_iter));
        }
        iter += 1;
        stagnation += 1;

        // Active window [lo, hi].
        let mut lo = hi;
        while lo > 0 {
            let s = h[(lo, lo - 1)].norm();
            if s <= deflate_tol * (h[(lo, lo)].norm() + h[(lo - 1, lo - 1)].norm()).max(T::one()) {
                h[(lo, lo - 1)] = Complex::zero();
                break;
            }
            lo -= 1;
        }

        // Wilkinson shift from the trailing 2x2 block, with an occasional
        // exceptional shift to break symmetry-induced cycles.
        let shift = if stagnation % 12 == 11 {
            h[(hi, hi)] + Complex::new(h[(hi, hi - 1)].norm() * fromf::<T>(1.5), T::zero())
        } else {
            let a11 = h[(hi - 1, hi - 1)];
            let a12 = h[(hi - 1, hi)];
            let a21 = h[(hi, hi - 1)];
            let a22 = h[(hi, hi)];
            let half = fromf::<T>(0.5);
            let mid = (a11 + a22).scale(half);
            let disc = ((a11 - a22).scale(half)).powu(2) + a12 * a21;
            let sq = disc.sqrt();
            let l1 = mid + sq;
            let l2 = mid - sq;
            if (l1 - a22).norm() <= (l2 - a22).norm() {
                l1
            } else {
                l2
            }
        };

        // Explicit shifted QR sweep with Givens rotations on the window.
        for i in lo..=hi {
            h[(i, i)] = h[(i, i)] - shift;
        }
        let mut rotations: Vec<(usize, T, Complex<T>)> = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (c, s) = givens(h[(k, k)], h[(k + 1, k)]);
            // Apply G^* from the left to rows k, k+1.
            for j in k..n {
                let t1 = h[(k, j)];
                let t2 = h[(k + 1, j)];
                h[(k, j)] = t1.scale(c) + s * t2;
                h[(k + 1, j)] = -s.conj() * t1 + t2.scale(c);
            }
            rotations.push((k, c, s));
        }
        for &(k, c, s) in &rotations {
            // Apply G from the right to columns k, k+1.
            for i in 0..=(k + 1).min(hi) {
                let t1 = h[(i, k)];
                let t2 = h[(i, k + 1)];
                h[(i, k)] = t1.scale(c) + t2 * s.conj();
                h[(i, k + 1)] = -t1 * s + t2.scale(c);
            }
            for i in 0..n {
                let t1 = q[(i, k)];
                let t2 = q[(i, k + 1)];
                q[(i, k)] = t1.scale(c) + t2 * s.conj();
                q[(i, k + 1)] = -t1 * s + t2.scale(c);
            }
        }
        for i in lo..=hi {
            h[(i, i)] = h[(i, i)] + shift;
        }
    }

    for i in 0..n {
        for j in 0..i {
            h[(i, j)] = Complex::zero();
        }
    }
    Ok((h, q))
}

/// Complex Givens rotation: returns `(c, s)` with `c` real so that
/// `[c, s; -conj(s), c]^* (a, b)^T = (r, 0)^T`.
fn givens<T: Scalar>(a: Complex<T>, b: Complex<T>) -> (T, Complex<T>) {
    if b.norm().is_zero() {
        return (T::one(), Complex::zero());
    }
    let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
    if a.norm().is_zero() {
        return (T::zero(), b.conj() / Complex::new(b.norm(), T::zero()));
    }
    let c = a.norm() / norm;
    let phase = a / Complex::new(a.norm(), T::zero());
    let s = phase * b.conj() / Complex::new(norm, T::zero());
    (c, s)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian
/// matrix via cyclic Jacobi rotations.
pub fn eigh<T: Scalar>(a: &CMatrix<T>) -> Result<(Vec<T>, Vec<CVector<T>>), LinalgError> {
    let n = a.dim();
    if n == 0 || n > MAX_DIM {
        return Err(LinalgError::DimensionTooLarge(n));
    }
    if !a.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let mut m = a.clone();
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm().max(T::one());
    let stop = scale * fromf::<T>(8.0) * T::epsilon();
    let max_sweeps = 40;

    for _sweep in 0..max_sweeps {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off + m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= stop * fromf::<T>(1e-2) / fromf::<T>(n as f64) {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let phase = apq / Complex::new(mag, T::zero());
                let tau = (aqq - app) / (mag + mag);
                let t = {
                    let sign = if tau >= T::zero() { T::one() } else { -T::one() };
                    sign / (tau.abs() + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                // J[p][p] = c, J[p][q] = s e^{i phi}, J[q][p] = -s e^{-i phi},
                // J[q][q] = c; update M <- J^* M J and V <- V J in place.
                let se = phase.scale(s);
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = mip.scale(c) - miq * se.conj();
                    m[(i, q)] = mip * se + miq.scale(c);
                }
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = mpj.scale(c) - se * mqj;
                    m[(q, j)] = se.conj() * mpj + mqj.scale(c);
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip.scale(c) - viq * se.conj();
                    v[(i, q)] = vip * se + viq.scale(c);
                }
            }
        }
    }

    let mut pairs: Vec<(T, CVector<T>)> = (0..n).map(|k| (m[(k, k)].re, v.column(k))).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let vals = pairs.iter().map(|p| p.0).collect();
    let vecs = pairs.into_iter().map(|p| p.1.normalized()).collect();
    Ok((vals, vecs))
}

/// `exp(-i K)` for Hermitian `K`; exactly unitary up to roundoff.
///
/// Closed form at `dim <= 2`, Jacobi eigendecomposition otherwise. This is
/// the per-step workhorse of the dephasing simulation.
pub fn unitary_phase_exp<T: Scalar>(k: &CMatrix<T>) -> CMatrix<T> {
    let n = k.dim();
    let i = Complex::new(T::zero(), T::one());
    match n {
        1 => CMatrix::diag(&[(-i * k[(0, 0)]).exp()]),
        2 => {
            // exp(-iK) = e^{-i tr/2} [cos(w) I - i sin(w)/w (K - tr/2)]
            let half = fromf::<T>(0.5);
            let mean = (k[(0, 0)].re + k[(1, 1)].re) * half;
            let d00 = k[(0, 0)].re - mean;
            let w = (d00 * d00 + k[(0, 1)].norm_sqr()).sqrt();
            let (cw, swow) = if w < T::epsilon() {
                (T::one(), T::one())
            } else {
                (w.cos(), w.sin() / w)
            };
            let pref = (-i * Complex::new(mean, T::zero())).exp();
            let mut out = CMatrix::zeros(2);
            let cwc = Complex::new(cw, T::zero());
            let fac = -i * Complex::new(swow, T::zero());
            out[(0, 0)] = pref * (cwc + fac * Complex::new(d00, T::zero()));
            out[(1, 1)] = pref * (cwc - fac * Complex::new(d00, T::zero()));
            out[(0, 1)] = pref * fac * k[(0, 1)];
            out[(1, 0)] = pref * fac * k[(1, 0)];
            out
        }
        _ => {
            let (vals, vecs) = eigh(k).expect("Hermitian input");
            let mut out = CMatrix::zeros(n);
            for (lambda, v) in vals.iter().zip(&vecs) {
                let phase = (-i * Complex::new(*lambda, T::zero())).exp();
                for r in 0..n {
                    for c in 0..n {
                        out[(r, c)] = out[(r, c)] + phase * v[r] * v[c].conj();
                    }
                }
            }
            out
        }
    }
}

/// `exp(G)` for anti-Hermitian `G = -iK`; delegates to
/// [`unitary_phase_exp`] with `K = iG`.
pub fn unitary_phase_exp_from<T: Scalar>(g: &CMatrix<T>) -> CMatrix<T> {
    let k = g.scale(Complex::new(T::zero(), T::one()));
    unitary_phase_exp(&k)
}

/// Allocation-free `out = exp(G)` for anti-Hermitian `G` at `dim <= 2`;
/// falls back to the allocating path for larger dimensions.
pub fn unitary_exp_into<T: Scalar>(g: &CMatrix<T>, out: &mut CMatrix<T>) {
    let i = Complex::new(T::zero(), T::one());
    match g.dim() {
        1 => out[(0, 0)] = g[(0, 0)].exp(),
        2 => {
            // K = iG Hermitian; exp(-iK) in closed form.
            let k00 = (i * g[(0, 0)]).re;
            let k11 = (i * g[(1, 1)]).re;
            let k01 = i * g[(0, 1)];
            let k10 = i * g[(1, 0)];
            let half = fromf::<T>(0.5);
            let mean = (k00 + k11) * half;
            let d00 = k00 - mean;
            let w = (d00 * d00 + k01.norm_sqr()).sqrt();
            let (cw, swow) = if w < T::epsilon() {
                (T::one(), T::one())
            } else {
                (w.cos(), w.sin() / w)
            };
            let pref = Complex::from_polar(T::one(), -mean);
            let cwc = Complex::new(cw, T::zero());
            let fac = -i * Complex::new(swow, T::zero());
            out[(0, 0)] = pref * (cwc + fac * Complex::new(d00, T::zero()));
            out[(1, 1)] = pref * (cwc - fac * Complex::new(d00, T::zero()));
            out[(0, 1)] = pref * fac * k01;
            out[(1, 0)] = pref * fac * k10;
        }
        _ => out.copy_from(&unitary_phase_exp_from(g)),
    }
}
