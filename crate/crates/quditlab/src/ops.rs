//! Qudit operators: generalized Paulis, QFT, modular CNOT, encoding-subspace
//! projectors, and embeddings of single-qudit operators into registers.
//!
//! Basis ordering convention, fixed once for the whole crate: site 1 is the
//! slowest-varying (leftmost) tensor factor, matching circuit drawings
//! top-to-bottom. A register basis index decodes as base-`d` digits with
//! site 1 the most significant digit.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::state::DensityMatrix;

/// Number of levels of a qudit, `d = 2s + 1` for spin `s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuditDim(usize);

impl QuditDim {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidInput(format!("qudit dimension {d} < 2")));
        }
        Ok(Self(d))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// Primitive d-th root of unity `e^{2 pi i / d}` raised to `power`.
    pub fn omega_pow(self, power: i64) -> Complex64 {
        let d = self.0 as i64;
        let k = power.rem_euclid(d);
        Complex64::from_polar(1.0, 2.0 * PI * k as f64 / d as f64)
    }
}

/// Default total-dimension cap for dense registers; guards memory.
pub const DEFAULT_DENSE_CAP: usize = 100_000;

/// Dense-dimension cap, overridable through `QUDITLAB_DENSE_CAP`.
pub fn dense_cap() -> usize {
    std::env::var("QUDITLAB_DENSE_CAP")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_DENSE_CAP)
}

/// Uniform register of `n` qudits with `d` levels each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RegisterShape {
    n: usize,
    d: QuditDim,
}

impl RegisterShape {
    pub fn new(n: usize, d: QuditDim) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("register needs at least one qudit".into()));
        }
        let cap = dense_cap();
        let mut total: usize = 1;
        for _ in 0..n {
            total = total
                .checked_mul(d.get())
                .filter(|&t| t <= cap)
                .ok_or(Error::DimensionCapExceeded {
                    dim: usize::MAX,
                    cap,
                })?;
        }
        Ok(Self { n, d })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> QuditDim {
        self.d
    }

    pub fn total_dim(&self) -> usize {
        self.d.get().pow(self.n as u32)
    }

    /// Dimension of the factors strictly left of `site` (1-based).
    pub(crate) fn left_dim(&self, site: usize) -> usize {
        self.d.get().pow((site - 1) as u32)
    }

    /// Dimension of the factors strictly right of `site` (1-based).
    pub(crate) fn right_dim(&self, site: usize) -> usize {
        self.d.get().pow((self.n - site) as u32)
    }

    /// Base-`d` digits of a basis index, site 1 first.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let d = self.d.get();
        let mut out = vec![0; self.n];
        for slot in out.iter_mut().rev() {
            *slot = index % d;
            index /= d;
        }
        out
    }

    /// Basis index of the given site digits.
    pub fn index_of(&self, digits: &[usize]) -> usize {
        let d = self.d.get();
        digits.iter().fold(0, |acc, &x| acc * d + x)
    }
}

/// Positions of the logical levels `|0_L>` and `|1_L>` inside one qudit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LogicalLevels {
    l0: usize,
    l1: usize,
}

impl LogicalLevels {
    pub fn new(l0: usize, l1: usize) -> Result<Self> {
        if l0 >= l1 {
            return Err(Error::InvalidInput(format!(
                "logical levels must satisfy l0 < l1, got ({l0}, {l1})"
            )));
        }
        Ok(Self { l0, l1 })
    }

    /// Maximally polarized pair `(0, d-1)`.
    pub fn polarized(d: QuditDim) -> Self {
        Self {
            l0: 0,
            l1: d.get() - 1,
        }
    }

    pub fn l0(&self) -> usize {
        self.l0
    }

    pub fn l1(&self) -> usize {
        self.l1
    }

    pub fn check_against(&self, d: QuditDim) -> Result<()> {
        if self.l1 > d.get() - 1 {
            return Err(Error::IndexOutOfRange {
                index: self.l1,
                bound: d.get(),
                context: "logical level",
            });
        }
        Ok(())
    }
}

/// Symmetric generalized Pauli X': ones on the super- and sub-diagonal,
/// no wraparound hop between `|d-1>` and `|0>`.
///
/// Hermitian for every `d`; unitary only at `d = 2`. The missing wraparound
/// is part of the model and must not be added.
pub fn gen_x_prime(d: QuditDim) -> ComplexMatrix {
    let n = d.get();
    let mut m = ComplexMatrix::zeros(n);
    for k in 0..n - 1 {
        m.set(k, k + 1, Complex64::ONE);
        m.set(k + 1, k, Complex64::ONE);
    }
    m
}

/// Generalized Pauli Z: `diag(omega^k)` with `omega = e^{2 pi i / d}`.
pub fn gen_z(d: QuditDim) -> ComplexMatrix {
    let n = d.get();
    ComplexMatrix::from_diagonal(
        &(0..n)
            .map(|k| d.omega_pow(k as i64))
            .collect::<Vec<_>>(),
    )
}

/// Cyclic shift `|k> -> |k+1 mod d>`; diagonalized by the QFT. Used for the
/// QEC correction powers.
pub fn cyclic_shift(d: QuditDim) -> ComplexMatrix {
    let n = d.get();
    let mut m = ComplexMatrix::zeros(n);
    for k in 0..n {
        m.set((k + 1) % n, k, Complex64::ONE);
    }
    m
}

/// Qudit quantum Fourier transform, `F[j,k] = omega^{jk} / sqrt(d)`.
pub fn qudit_qft(d: QuditDim) -> ComplexMatrix {
    let n = d.get();
    let norm = 1.0 / (n as f64).sqrt();
    ComplexMatrix::from_fn(n, |j, k| d.omega_pow((j * k) as i64) * norm)
}

/// Modular-addition CNOT on two qudits: `|a,b> -> |a, (a+b) mod d>`.
/// Unlike the qubit gate it is not self-inverse; see [`qudit_cnot_dagger`].
pub fn qudit_cnot(d: QuditDim) -> ComplexMatrix {
    let n = d.get();
    let mut m = ComplexMatrix::zeros(n * n);
    for a in 0..n {
        for b in 0..n {
            m.set(a * n + (a + b) % n, a * n + b, Complex64::ONE);
        }
    }
    m
}

/// Inverse CNOT, `|a,b> -> |a, (b-a) mod d>`.
pub fn qudit_cnot_dagger(d: QuditDim) -> ComplexMatrix {
    qudit_cnot(d).dagger()
}

/// Embeds a single-qudit operator at `site` (1-based) of a register:
/// `1 ⊗ ... ⊗ op ⊗ ... ⊗ 1`.
pub fn embed_at(op: &ComplexMatrix, site: usize, shape: RegisterShape) -> Result<ComplexMatrix> {
    if site == 0 || site > shape.n() {
        return Err(Error::IndexOutOfRange {
            index: site,
            bound: shape.n(),
            context: "embed_at site",
        });
    }
    if op.dim() != shape.d().get() {
        return Err(Error::DimensionMismatch {
            left: op.dim(),
            right: shape.d().get(),
            context: "embed_at operator",
        });
    }
    let left = ComplexMatrix::identity(shape.left_dim(site));
    let right = ComplexMatrix::identity(shape.right_dim(site));
    Ok(left.kron(op).kron(&right))
}

/// Single-qudit projector `|l0><l0| + |l1><l1|` onto the logical levels.
fn level_projector(d: QuditDim, levels: LogicalLevels) -> ComplexMatrix {
    let mut p = ComplexMatrix::zeros(d.get());
    p.set(levels.l0(), levels.l0(), Complex64::ONE);
    p.set(levels.l1(), levels.l1(), Complex64::ONE);
    p
}

/// Encoding and non-encoding projectors on a two-qudit register:
/// `P_en = (|l0><l0|+|l1><l1|) ⊗ (|l0><l0|+|l1><l1|)`, `Q_en = 1 - P_en`.
///
/// At `d = 2` the non-encoding subspace does not exist (`Q_en = 0`).
pub fn encoding_projectors(
    d: QuditDim,
    levels: LogicalLevels,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    levels.check_against(d)?;
    let p1 = level_projector(d, levels);
    let p = p1.kron(&p1);
    let q = ComplexMatrix::identity(p.dim()).sub(&p)?;
    Ok((p, q))
}

/// Pure logical Bell state `(|l0 l0> + |l1 l1>)/sqrt(2)` on the two-qudit
/// register.
pub fn logical_bell(d: QuditDim, levels: LogicalLevels) -> Result<DensityMatrix> {
    levels.check_against(d)?;
    let n = d.get();
    let mut amp = vec![Complex64::ZERO; n * n];
    let w = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    amp[levels.l0() * n + levels.l0()] = w;
    amp[levels.l1() * n + levels.l1()] = w;
    DensityMatrix::from_pure(&amp)
}

/// Pure maximally entangled state `(1/sqrt(d)) sum_i |i,i>`.
pub fn full_entangled(d: QuditDim) -> Result<DensityMatrix> {
    let n = d.get();
    let mut amp = vec![Complex64::ZERO; n * n];
    let w = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    for i in 0..n {
        amp[i * n + i] = w;
    }
    DensityMatrix::from_pure(&amp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn d(n: usize) -> QuditDim {
        QuditDim::new(n).unwrap()
    }

    #[test]
    fn x_prime_small_dims() {
        let x2 = gen_x_prime(d(2));
        let pauli_x =
            ComplexMatrix::from_row_slice(2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
                .unwrap();
        assert!(x2.max_abs_diff(&pauli_x) == 0.0);

        let x3 = gen_x_prime(d(3));
        let expected = ComplexMatrix::from_row_slice(
            3,
            &[
                c(0., 0.), c(1., 0.), c(0., 0.),
                c(1., 0.), c(0., 0.), c(1., 0.),
                c(0., 0.), c(1., 0.), c(0., 0.),
            ],
        )
        .unwrap();
        assert!(x3.max_abs_diff(&expected) == 0.0);
        // no wraparound corner
        assert_eq!(x3.get(0, 2), Complex64::ZERO);
    }

    #[test]
    fn x_prime_hermitian_all_dims() {
        for n in 2..=8 {
            assert!(gen_x_prime(d(n)).hermiticity_deviation() == 0.0);
        }
    }

    #[test]
    fn z_small_dims_and_roots_of_unity() {
        let z2 = gen_z(d(2));
        let expected = ComplexMatrix::from_diagonal(&[c(1., 0.), c(-1., 0.)]);
        assert!(z2.max_abs_diff(&expected) <= 1e-15);

        let z3 = gen_z(d(3));
        let w = Complex64::from_polar(1.0, 2.0 * PI / 3.0);
        let expected = ComplexMatrix::from_diagonal(&[c(1., 0.), w, w * w]);
        assert!(z3.max_abs_diff(&expected) <= 1e-15);

        for n in 2..=8 {
            let z = gen_z(d(n));
            assert!(z.unitarity_deviation() <= 1e-12, "d={n}");
            let mut pow = ComplexMatrix::identity(n);
            for _ in 0..n {
                pow = pow.matmul(&z).unwrap();
            }
            assert!(
                pow.max_abs_diff(&ComplexMatrix::identity(n)) <= 1e-12,
                "Z^d != I at d={n}"
            );
        }
    }

    #[test]
    fn embed_identity_and_site_placement() {
        let shape = RegisterShape::new(2, d(2)).unwrap();
        let i2 = ComplexMatrix::identity(2);
        let e = embed_at(&i2, 1, shape).unwrap();
        assert!(e.max_abs_diff(&ComplexMatrix::identity(4)) == 0.0);

        let x = gen_x_prime(d(2));
        let e2 = embed_at(&x, 2, shape).unwrap();
        assert!(e2.max_abs_diff(&i2.kron(&x)) == 0.0);
        let e1 = embed_at(&x, 1, shape).unwrap();
        assert!(e1.max_abs_diff(&x.kron(&i2)) == 0.0);
    }

    #[test]
    fn embeds_at_different_sites_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let shape = RegisterShape::new(2, d(3)).unwrap();
        let a = ComplexMatrix::from_fn(3, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let b = ComplexMatrix::from_fn(3, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let ea = embed_at(&a, 1, shape).unwrap();
        let eb = embed_at(&b, 2, shape).unwrap();
        let ab = ea.matmul(&eb).unwrap();
        let ba = eb.matmul(&ea).unwrap();
        assert!(ab.max_abs_diff(&ba) <= 1e-12);
    }

    #[test]
    fn embed_rejects_bad_site_and_dim() {
        let shape = RegisterShape::new(2, d(3)).unwrap();
        let op = ComplexMatrix::identity(3);
        assert!(embed_at(&op, 0, shape).is_err());
        assert!(embed_at(&op, 3, shape).is_err());
        let wrong = ComplexMatrix::identity(2);
        assert!(embed_at(&wrong, 1, shape).is_err());
    }

    #[test]
    fn qft_is_hadamard_at_d2_and_unitary() {
        let f2 = qudit_qft(d(2));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = ComplexMatrix::from_row_slice(2, &[c(s, 0.), c(s, 0.), c(s, 0.), c(-s, 0.)])
            .unwrap();
        assert!(f2.max_abs_diff(&h) <= 1e-15);

        for n in 2..=8 {
            assert!(qudit_qft(d(n)).unitarity_deviation() <= 1e-12, "d={n}");
        }
    }

    #[test]
    fn qft_diagonalizes_cyclic_shift() {
        // F S F† = diag(omega^k)
        let dd = d(3);
        let f = qudit_qft(dd);
        let s = cyclic_shift(dd);
        let conj = f.matmul(&s).unwrap().matmul(&f.dagger()).unwrap();
        let expected = gen_z(dd);
        assert!(conj.max_abs_diff(&expected) <= 1e-12);
    }

    #[test]
    fn cnot_d2_standard_self_inverse() {
        let g = qudit_cnot(d(2));
        let expected = ComplexMatrix::from_row_slice(
            4,
            &[
                c(1., 0.), c(0., 0.), c(0., 0.), c(0., 0.),
                c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.),
                c(0., 0.), c(0., 0.), c(0., 0.), c(1., 0.),
                c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.),
            ],
        )
        .unwrap();
        assert!(g.max_abs_diff(&expected) == 0.0);
        assert!(g.max_abs_diff(&qudit_cnot_dagger(d(2))) == 0.0);
    }

    #[test]
    fn cnot_modular_addition_and_unitarity() {
        // d=3: |1,2> -> |1,0>
        let g = qudit_cnot(d(3));
        assert_eq!(g.get(1 * 3 + 0, 1 * 3 + 2), Complex64::ONE);

        let g4 = qudit_cnot(d(4));
        let prod = g4.matmul(&qudit_cnot_dagger(d(4))).unwrap();
        assert!(prod.max_abs_diff(&ComplexMatrix::identity(16)) == 0.0);
    }

    #[test]
    fn projectors_d2_fill_whole_space() {
        let (p, q) = encoding_projectors(d(2), LogicalLevels::polarized(d(2))).unwrap();
        assert!(p.max_abs_diff(&ComplexMatrix::identity(4)) == 0.0);
        assert!(q.max_abs() == 0.0);
    }

    #[test]
    fn projector_algebra() {
        for n in [3usize, 4, 6] {
            let dd = d(n);
            let (p, q) = encoding_projectors(dd, LogicalLevels::polarized(dd)).unwrap();
            assert_abs_diff_eq!(p.trace().re, 4.0, epsilon = 1e-14);
            let p2 = p.matmul(&p).unwrap();
            assert!(p2.max_abs_diff(&p) <= 1e-14);
            let q2 = q.matmul(&q).unwrap();
            assert!(q2.max_abs_diff(&q) <= 1e-14);
            let sum = p.add(&q).unwrap();
            assert!(sum.max_abs_diff(&ComplexMatrix::identity(n * n)) <= 1e-14);
            let pq = p.matmul(&q).unwrap();
            assert!(pq.max_abs() <= 1e-14);
            assert!(p.hermiticity_deviation() == 0.0);
        }
    }

    #[test]
    fn projector_rejects_out_of_range_levels() {
        assert!(encoding_projectors(d(3), LogicalLevels::new(0, 3).unwrap()).is_err());
    }

    #[test]
    fn bell_states() {
        let b = logical_bell(d(2), LogicalLevels::polarized(d(2))).unwrap();
        let f = full_entangled(d(2)).unwrap();
        assert!(b.matrix().max_abs_diff(f.matrix()) <= 1e-15);
        assert_abs_diff_eq!(b.trace_real(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.purity(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(f.purity(), 1.0, epsilon = 1e-12);

        // d=6 logical Bell: support exactly on the {|0,0>, |5,5>} coherence block
        let b6 = logical_bell(d(6), LogicalLevels::polarized(d(6))).unwrap();
        let m = b6.matrix();
        let idx0 = 0 * 6 + 0;
        let idx5 = 5 * 6 + 5;
        for i in 0..36 {
            for j in 0..36 {
                let v = m.get(i, j).norm();
                if (i == idx0 || i == idx5) && (j == idx0 || j == idx5) {
                    assert_abs_diff_eq!(v, 0.5, epsilon = 1e-12);
                } else {
                    assert!(v == 0.0, "unexpected support at ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn embedding_preserves_unitarity() {
        let shape = RegisterShape::new(3, d(3)).unwrap();
        let f = qudit_qft(d(3));
        let e = embed_at(&f, 2, shape).unwrap();
        assert!(e.unitarity_deviation() <= 1e-12);
    }

    #[test]
    fn register_cap_enforced() {
        // 8 qudits of d=6 exceed the default 1e5 cap
        assert!(matches!(
            RegisterShape::new(8, d(6)),
            Err(Error::DimensionCapExceeded { .. })
        ));
    }

    #[test]
    fn digits_round_trip() {
        let shape = RegisterShape::new(3, d(5)).unwrap();
        for idx in [0usize, 7, 64, 124] {
            assert_eq!(shape.index_of(&shape.digits(idx)), idx);
        }
        // site 1 is the most significant digit
        assert_eq!(shape.digits(25), vec![1, 0, 0]);
    }
}
