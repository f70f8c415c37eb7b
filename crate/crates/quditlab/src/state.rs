//! Density matrices and register-structured state transformations.
//!
//! The free functions here exploit tensor structure instead of materializing
//! embedded operators: conjugating a `D x D` state by a single-site operator
//! costs `O(D^2 d)` rather than `O(D^3)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::ops::RegisterShape;
use crate::tol;

/// Hermitian, unit-trace, positive-semidefinite matrix over a register.
///
/// Construction validates finiteness, Hermiticity and unit trace; positivity
/// is an invariant maintained by the maps applied to it and is checked by
/// the test suites rather than on every hot-path construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: ComplexMatrix,
}

impl DensityMatrix {
    pub fn from_matrix(m: ComplexMatrix) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::NonFiniteEntry("density matrix"));
        }
        let dev = m.hermiticity_deviation();
        if dev > tol::STATE_PSD {
            return Err(Error::NonHermitianInput {
                deviation: dev,
                tolerance: tol::STATE_PSD,
            });
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > tol::UNIT_TRACE || tr.im.abs() > tol::UNIT_TRACE {
            return Err(Error::NonUnitTrace {
                trace: tr.re,
                tolerance: tol::UNIT_TRACE,
                context: "density matrix construction",
            });
        }
        Ok(Self { m })
    }

    /// `|psi><psi|` from amplitudes; the vector is normalized first.
    pub fn from_pure(amplitudes: &[Complex64]) -> Result<Self> {
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sqr.is_finite() || norm_sqr <= 0.0 {
            return Err(Error::InvalidInput(
                "pure state amplitudes must be nonzero and finite".into(),
            ));
        }
        let scale = 1.0 / norm_sqr.sqrt();
        let dim = amplitudes.len();
        let mut m = ComplexMatrix::zeros(dim);
        for i in 0..dim {
            let ai = amplitudes[i] * scale;
            if ai == Complex64::ZERO {
                continue;
            }
            for j in 0..dim {
                m.set(i, j, ai * (amplitudes[j] * scale).conj());
            }
        }
        Ok(Self { m })
    }

    /// Basis state `|index><index|`.
    pub fn basis_state(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange {
                index,
                bound: dim,
                context: "basis_state",
            });
        }
        let mut amp = vec![Complex64::ZERO; dim];
        amp[index] = Complex64::ONE;
        Self::from_pure(&amp)
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn trace_real(&self) -> f64 {
        self.m.trace().re
    }

    /// `Tr[rho^2]`.
    pub fn purity(&self) -> f64 {
        let n = self.m.dim();
        let mut sum = 0.0;
        for i in 0..n {
            for j in 0..n {
                sum += (self.m.get(i, j) * self.m.get(j, i)).re;
            }
        }
        sum
    }

    /// Smallest eigenvalue; used by invariant tests for PSD checks.
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let eig = self.m.hermitian_part().hermitian_eig()?;
        Ok(*eig.eigenvalues.first().expect("nonempty spectrum"))
    }
}

/// Conjugates `rho` by a single-site operator: `(1 ⊗ op ⊗ 1) rho (1 ⊗ op ⊗ 1)†`
/// without building the embedding. `site` is 1-based.
pub fn apply_site_operator(
    rho: &ComplexMatrix,
    op: &ComplexMatrix,
    site: usize,
    shape: RegisterShape,
) -> Result<ComplexMatrix> {
    if site == 0 || site > shape.n() {
        return Err(Error::IndexOutOfRange {
            index: site,
            bound: shape.n(),
            context: "apply_site_operator site",
        });
    }
    let d = shape.d().get();
    if op.dim() != d {
        return Err(Error::DimensionMismatch {
            left: op.dim(),
            right: d,
            context: "apply_site_operator operator",
        });
    }
    let total = shape.total_dim();
    if rho.dim() != total {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: total,
            context: "apply_site_operator state",
        });
    }
    let right = shape.right_dim(site);
    let stride = right; // distance between consecutive site levels in the index

    // rows: out[(a,k,b), j] = sum_k' op[k,k'] rho[(a,k',b), j]
    let mut tmp = ComplexMatrix::zeros(total);
    {
        let src = rho.data();
        let dst = tmp.data_mut();
        for row in 0..total {
            let k = (row / stride) % d;
            let base = row - k * stride;
            for kp in 0..d {
                let o = op.get(k, kp);
                if o == Complex64::ZERO {
                    continue;
                }
                let src_row = base + kp * stride;
                let s = &src[src_row * total..(src_row + 1) * total];
                let dr = &mut dst[row * total..(row + 1) * total];
                for (x, &v) in dr.iter_mut().zip(s) {
                    *x += o * v;
                }
            }
        }
    }

    // columns: out[i, (a,k,b)] = sum_k' tmp[i, (a,k',b)] conj(op[k,k'])
    let mut out = ComplexMatrix::zeros(total);
    {
        let src = tmp.data();
        let dst = out.data_mut();
        for col in 0..total {
            let k = (col / stride) % d;
            let base = col - k * stride;
            for kp in 0..d {
                let o = op.get(k, kp).conj();
                if o == Complex64::ZERO {
                    continue;
                }
                let src_col = base + kp * stride;
                for i in 0..total {
                    dst[i * total + col] += src[i * total + src_col] * o;
                }
            }
        }
    }
    Ok(out)
}

/// Applies a basis permutation `U` with `U|i> = |perm[i]>`:
/// `out[perm[i], perm[j]] = rho[i, j]`.
pub fn permute_basis(rho: &ComplexMatrix, perm: &[usize]) -> Result<ComplexMatrix> {
    let n = rho.dim();
    if perm.len() != n {
        return Err(Error::DimensionMismatch {
            left: perm.len(),
            right: n,
            context: "permute_basis",
        });
    }
    let mut out = ComplexMatrix::zeros(n);
    for i in 0..n {
        let pi = perm[i];
        for j in 0..n {
            out.set(pi, perm[j], rho.get(i, j));
        }
    }
    Ok(out)
}

/// Basis permutation of the modular CNOT between two register sites
/// (1-based): digit at `target` becomes `(target + control) mod d`.
pub fn cnot_permutation(shape: RegisterShape, control: usize, target: usize) -> Result<Vec<usize>> {
    let n = shape.n();
    if control == 0 || control > n || target == 0 || target > n || control == target {
        return Err(Error::IndexOutOfRange {
            index: target,
            bound: n,
            context: "cnot_permutation sites",
        });
    }
    let d = shape.d().get();
    let total = shape.total_dim();
    let mut perm = vec![0usize; total];
    for (idx, slot) in perm.iter_mut().enumerate() {
        let mut digits = shape.digits(idx);
        digits[target - 1] = (digits[target - 1] + digits[control - 1]) % d;
        *slot = shape.index_of(&digits);
    }
    Ok(perm)
}

/// Basis permutation of the inverse modular CNOT: digit at `target`
/// becomes `(target - control) mod d`.
pub fn cnot_dagger_permutation(
    shape: RegisterShape,
    control: usize,
    target: usize,
) -> Result<Vec<usize>> {
    let n = shape.n();
    if control == 0 || control > n || target == 0 || target > n || control == target {
        return Err(Error::IndexOutOfRange {
            index: target,
            bound: n,
            context: "cnot_dagger_permutation sites",
        });
    }
    let d = shape.d().get();
    let total = shape.total_dim();
    let mut perm = vec![0usize; total];
    for (idx, slot) in perm.iter_mut().enumerate() {
        let mut digits = shape.digits(idx);
        digits[target - 1] = (digits[target - 1] + d - digits[control - 1] % d) % d;
        *slot = shape.index_of(&digits);
    }
    Ok(perm)
}

/// Zeroes every row/column outside `mask`: `Pi rho Pi` for the diagonal
/// projector selecting the masked basis states. Returns the (unnormalized)
/// projected matrix and its trace.
pub fn project_mask(rho: &ComplexMatrix, mask: &[bool]) -> (ComplexMatrix, f64) {
    let n = rho.dim();
    debug_assert_eq!(mask.len(), n);
    let mut out = ComplexMatrix::zeros(n);
    let mut weight = 0.0;
    for i in 0..n {
        if !mask[i] {
            continue;
        }
        weight += rho.get(i, i).re;
        for j in 0..n {
            if mask[j] {
                out.set(i, j, rho.get(i, j));
            }
        }
    }
    (out, weight)
}

/// Partial trace keeping the listed sites (1-based, in the given order).
pub fn partial_trace_keep(
    rho: &ComplexMatrix,
    shape: RegisterShape,
    keep: &[usize],
) -> Result<ComplexMatrix> {
    let n = shape.n();
    for &s in keep {
        if s == 0 || s > n {
            return Err(Error::IndexOutOfRange {
                index: s,
                bound: n,
                context: "partial_trace_keep site",
            });
        }
    }
    if rho.dim() != shape.total_dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: shape.total_dim(),
            context: "partial_trace_keep state",
        });
    }
    let d = shape.d().get();
    let traced: Vec<usize> = (1..=n).filter(|s| !keep.contains(s)).collect();
    let kept_dim = d.pow(keep.len() as u32);
    let traced_dim = d.pow(traced.len() as u32);
    let mut out = ComplexMatrix::zeros(kept_dim);

    let mut kept_digits_i = vec![0usize; n];
    let mut kept_digits_j = vec![0usize; n];
    let kshape = RegisterShape::new(keep.len().max(1), shape.d())?;
    for ki in 0..kept_dim {
        let di = kshape.digits(ki);
        for kj in 0..kept_dim {
            let dj = kshape.digits(kj);
            let mut acc = Complex64::ZERO;
            for t in 0..traced_dim {
                // assemble full indices with identical digits on traced sites
                let mut rem = t;
                kept_digits_i.iter_mut().for_each(|x| *x = 0);
                kept_digits_j.iter_mut().for_each(|x| *x = 0);
                for (slot, &s) in keep.iter().enumerate() {
                    kept_digits_i[s - 1] = di[slot];
                    kept_digits_j[s - 1] = dj[slot];
                }
                for &s in traced.iter().rev() {
                    let digit = rem % d;
                    rem /= d;
                    kept_digits_i[s - 1] = digit;
                    kept_digits_j[s - 1] = digit;
                }
                acc += rho.get(shape.index_of(&kept_digits_i), shape.index_of(&kept_digits_j));
            }
            out.set(ki, kj, acc);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::{embed_at, gen_x_prime, qudit_cnot, QuditDim};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_density(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
        let raw = ComplexMatrix::from_fn(dim, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let psd = raw.matmul(&raw.dagger()).unwrap();
        let tr = psd.trace().re;
        DensityMatrix::from_matrix(psd.scale(c(1.0 / tr, 0.0))).unwrap()
    }

    #[test]
    fn pure_state_has_unit_purity() {
        let amp = [c(0.6, 0.0), c(0.0, 0.8)];
        let rho = DensityMatrix::from_pure(&amp).unwrap();
        assert_abs_diff_eq!(rho.trace_real(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn construction_rejects_bad_matrices() {
        let not_unit = ComplexMatrix::identity(2);
        assert!(matches!(
            DensityMatrix::from_matrix(not_unit),
            Err(Error::NonUnitTrace { .. })
        ));
        let mut skew = ComplexMatrix::zeros(2);
        skew.set(0, 0, c(1.0, 0.0));
        skew.set(0, 1, c(0.3, 0.0));
        assert!(DensityMatrix::from_matrix(skew).is_err());
    }

    #[test]
    fn site_operator_matches_dense_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let d3 = QuditDim::new(3).unwrap();
        let shape = RegisterShape::new(3, d3).unwrap();
        let rho = random_density(27, &mut rng);
        let op = ComplexMatrix::from_fn(3, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        for site in 1..=3 {
            let fast = apply_site_operator(rho.matrix(), &op, site, shape).unwrap();
            let emb = embed_at(&op, site, shape).unwrap();
            let dense = emb
                .matmul(rho.matrix())
                .unwrap()
                .matmul(&emb.dagger())
                .unwrap();
            assert!(fast.max_abs_diff(&dense) <= 1e-12, "site {site}");
        }
    }

    #[test]
    fn cnot_permutation_matches_dense_gate() {
        let d3 = QuditDim::new(3).unwrap();
        let shape = RegisterShape::new(2, d3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let rho = random_density(9, &mut rng);
        let perm = cnot_permutation(shape, 1, 2).unwrap();
        let fast = permute_basis(rho.matrix(), &perm).unwrap();
        let g = qudit_cnot(d3);
        let dense = g.matmul(rho.matrix()).unwrap().matmul(&g.dagger()).unwrap();
        assert!(fast.max_abs_diff(&dense) <= 1e-13);
    }

    #[test]
    fn partial_trace_of_product_state() {
        let d2 = QuditDim::new(2).unwrap();
        let shape = RegisterShape::new(2, d2).unwrap();
        // |0><0| ⊗ |+><+|
        let zero = DensityMatrix::basis_state(2, 0).unwrap();
        let plus = DensityMatrix::from_pure(&[c(1.0, 0.0), c(1.0, 0.0)]).unwrap();
        let prod = zero.matrix().kron(plus.matrix());
        let r1 = partial_trace_keep(&prod, shape, &[1]).unwrap();
        assert!(r1.max_abs_diff(zero.matrix()) <= 1e-14);
        let r2 = partial_trace_keep(&prod, shape, &[2]).unwrap();
        assert!(r2.max_abs_diff(plus.matrix()) <= 1e-14);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let d2 = QuditDim::new(2).unwrap();
        let shape = RegisterShape::new(3, d2).unwrap();
        let rho = random_density(8, &mut rng);
        let reduced = partial_trace_keep(rho.matrix(), shape, &[1, 3]).unwrap();
        assert_abs_diff_eq!(reduced.trace().re, 1.0, epsilon = 1e-12);
        assert_eq!(reduced.dim(), 4);
    }

    #[test]
    fn project_mask_keeps_block() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let rho = random_density(4, &mut rng);
        let mask = [true, false, false, true];
        let (proj, w) = project_mask(rho.matrix(), &mask);
        assert_abs_diff_eq!(
            w,
            rho.matrix().get(0, 0).re + rho.matrix().get(3, 3).re,
            epsilon = 1e-14
        );
        assert_eq!(proj.get(1, 1), Complex64::ZERO);
        assert_eq!(proj.get(0, 1), Complex64::ZERO);
        assert_eq!(proj.get(0, 3), rho.matrix().get(0, 3));
    }

    #[test]
    fn x_prime_leak_example() {
        // applying X' to |1> spreads to |0> and |2>; site operator on a
        // 2-qudit register only touches the chosen site
        let d3 = QuditDim::new(3).unwrap();
        let shape = RegisterShape::new(2, d3).unwrap();
        let mut amp = vec![Complex64::ZERO; 9];
        amp[0 * 3 + 1] = Complex64::ONE; // |0,1>
        let rho = DensityMatrix::from_pure(&amp).unwrap();
        let out = apply_site_operator(rho.matrix(), &gen_x_prime(d3), 2, shape).unwrap();
        // X'|1> = |0> + |2>, so weight lands on |0,0> and |0,2>
        assert_abs_diff_eq!(out.get(0, 0).re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out.get(2, 2).re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out.trace().re, 2.0, epsilon = 1e-14);
    }
}
