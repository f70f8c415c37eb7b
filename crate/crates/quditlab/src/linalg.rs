//! Dense complex linear algebra on square matrices.
//!
//! Entries are stored row-major: `data[i * dim + j]` is the element in row
//! `i`, column `j`. Every matrix in this crate is square; basis ordering is
//! documented against this row-major layout by each module that builds
//! multi-qudit operators.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

/// Dense square matrix of complex doubles, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Zero matrix of the given dimension.
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex64::ZERO; dim * dim],
        }
    }

    /// Identity matrix of the given dimension.
    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = Complex64::ONE;
        }
        m
    }

    /// Builds a matrix by evaluating `f(row, col)` at every entry.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m.data[i * dim + j] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from a row-major slice; `data.len()` must be `dim * dim`.
    pub fn from_row_slice(dim: usize, data: &[Complex64]) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                left: data.len(),
                right: dim * dim,
                context: "from_row_slice",
            });
        }
        Ok(Self {
            dim,
            data: data.to_vec(),
        })
    }

    /// Diagonal matrix with the given entries.
    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.dim + j] = v;
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: rhs.dim,
                context: "matmul",
            });
        }
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == Complex64::ZERO {
                    continue;
                }
                let row = &rhs.data[k * n..(k + 1) * n];
                let dst = &mut out.data[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| self.data[j * n + i].conj())
    }

    /// Sum of diagonal entries.
    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }

    /// Kronecker product; the left factor indexes the slower-varying
    /// (most significant) part of the composite basis.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (a, b) = (self.dim, rhs.dim);
        let n = a * b;
        let mut out = Self::zeros(n);
        for i1 in 0..a {
            for j1 in 0..a {
                let v = self.data[i1 * a + j1];
                if v == Complex64::ZERO {
                    continue;
                }
                for i2 in 0..b {
                    for j2 in 0..b {
                        out.data[(i1 * b + i2) * n + (j1 * b + j2)] = v * rhs.data[i2 * b + j2];
                    }
                }
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: rhs.dim,
                context: "add",
            });
        }
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch {
                left: self.dim,
                right: rhs.dim,
                context: "sub",
            });
        }
        Ok(Self {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    /// Adds `s * rhs` into `self` in place.
    pub fn axpy(&mut self, s: f64, rhs: &Self) {
        debug_assert_eq!(self.dim, rhs.dim);
        for (d, &v) in self.data.iter_mut().zip(&rhs.data) {
            *d += s * v;
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise deviation from `rhs`.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max |m[i,j] - conj(m[j,i])| over all entries.
    pub fn hermiticity_deviation(&self) -> f64 {
        let n = self.dim;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        dev
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        let n = self.dim;
        Self::from_fn(n, |i, j| {
            0.5 * (self.data[i * n + j] + self.data[j * n + i].conj())
        })
    }

    /// Largest entrywise deviation of `U U†` from the identity.
    pub fn unitarity_deviation(&self) -> f64 {
        let prod = self.matmul(&self.dagger()).expect("square");
        prod.max_abs_diff(&Self::identity(self.dim))
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
    ///
    /// The input must be Hermitian within [`tol::HERMITICITY`]; it is
    /// symmetrized before decomposing. Eigenvalues come back ascending with
    /// matching eigenvector columns.
    pub fn hermitian_eig(&self) -> Result<HermitianEig> {
        if !self.is_finite() {
            return Err(Error::NonFiniteEntry("hermitian_eig input"));
        }
        let dev = self.hermiticity_deviation();
        if dev > tol::HERMITICITY {
            return Err(Error::NonHermitianInput {
                deviation: dev,
                tolerance: tol::HERMITICITY,
            });
        }
        let (values, vectors) = jacobi_hermitian(&self.hermitian_part());
        let n = self.dim;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&k| values[k]).collect();
        let eigenvectors = ComplexMatrix::from_fn(n, |i, j| vectors.get(i, order[j]));
        Ok(HermitianEig {
            eigenvalues,
            eigenvectors,
        })
    }

    /// Hermitian PSD square root.
    ///
    /// Eigenvalues in `[-tol, 0)` (roundoff drift off the PSD cone) are
    /// clamped to zero; anything below fails with [`Error::NotPsd`].
    pub fn psd_sqrt(&self) -> Result<Self> {
        sqrt_clamped(self, tol::PSD_EIGENVALUE)
    }
}

/// Cyclic Jacobi eigendecomposition of a numerically Hermitian matrix.
///
/// Sweeps annihilate each off-diagonal pair (p, q) with a complex Givens
/// rotation until the off-diagonal Frobenius mass drops below 1e-14 of the
/// matrix norm (or 50 sweeps). Unconditionally convergent, which is what
/// repeated small spectral calls on rank-deficient projections need.
fn jacobi_hermitian(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = m.dim;
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(n);
    if n <= 1 {
        return ((0..n).map(|i| a.get(i, i).re).collect(), v);
    }
    let scale = m.frobenius_norm().max(f64::MIN_POSITIVE);
    let stop = 1e-14 * scale;

    for _sweep in 0..50 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a.get(p, q).norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= stop {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a.get(p, q);
                let r = apq.norm();
                if r <= f64::MIN_POSITIVE {
                    continue;
                }
                let phase = apq / r; // e^{i phi}
                let app = a.get(p, p).re;
                let aqq = a.get(q, q).re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sp = s * phase; // s e^{i phi}
                let spc = sp.conj();

                // columns p and q of A and of the accumulated V
                for i in 0..n {
                    let aip = a.get(i, p);
                    let aiq = a.get(i, q);
                    a.set(i, p, c * aip - spc * aiq);
                    a.set(i, q, sp * aip + c * aiq);
                    let vip = v.get(i, p);
                    let viq = v.get(i, q);
                    v.set(i, p, c * vip - spc * viq);
                    v.set(i, q, sp * vip + c * viq);
                }
                // rows p and q by conjugate symmetry
                for j in 0..n {
                    let apj = a.get(p, j);
                    let aqj = a.get(q, j);
                    a.set(p, j, c * apj - sp * aqj);
                    a.set(q, j, spc * apj + c * aqj);
                }
                a.set(p, p, Complex64::new(app - t * r, 0.0));
                a.set(q, q, Complex64::new(aqq + t * r, 0.0));
                a.set(p, q, Complex64::ZERO);
                a.set(q, p, Complex64::ZERO);
            }
        }
    }
    ((0..n).map(|i| a.get(i, i).re).collect(), v)
}

/// PSD square root with a caller-chosen clamp tolerance for small negative
/// eigenvalues. Shared by `psd_sqrt` (strict linalg contract) and the
/// fidelity metric (states off the cone by up to the evolution tolerance).
pub(crate) fn sqrt_clamped(m: &ComplexMatrix, clamp: f64) -> Result<ComplexMatrix> {
    let eig = m.hermitian_eig()?;
    if let Some(&min) = eig.eigenvalues.first() {
        if min < -clamp {
            return Err(Error::NotPsd {
                min_eigenvalue: min,
                tolerance: clamp,
            });
        }
    }
    let roots: Vec<Complex64> = eig
        .eigenvalues
        .iter()
        .map(|&l| {
            let l = if l <= tol::EIGENVALUE_FLOOR { 0.0 } else { l };
            Complex64::new(l.sqrt(), 0.0)
        })
        .collect();
    Ok(eig.rebuild_with(&roots))
}

/// Result of a Hermitian eigendecomposition: real eigenvalues ascending,
/// orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEig {
    /// `V Λ V†` for the stored spectrum; reconstructs the input.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let diag: Vec<Complex64> = self
            .eigenvalues
            .iter()
            .map(|&l| Complex64::new(l, 0.0))
            .collect();
        self.rebuild_with(&diag)
    }

    /// `V diag(f) V†` for an arbitrary replacement spectrum `f`.
    pub fn rebuild_with(&self, diag: &[Complex64]) -> ComplexMatrix {
        let n = self.eigenvectors.dim();
        let v = &self.eigenvectors;
        let mut out = ComplexMatrix::zeros(n);
        for k in 0..n {
            let f = diag[k];
            if f == Complex64::ZERO {
                continue;
            }
            for i in 0..n {
                let vi = v.get(i, k) * f;
                if vi == Complex64::ZERO {
                    continue;
                }
                for j in 0..n {
                    let t = vi * v.get(j, k).conj();
                    out.data[i * n + j] += t;
                }
            }
        }
        out
    }
}
