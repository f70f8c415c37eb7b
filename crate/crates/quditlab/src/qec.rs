//! 3-qudit repetition code with QFT-sandwiched errors, syndrome extraction
//! and Table-II correction lookup.
//!
//! Register layout (1-based sites): 1 = reference qudit (error-free half of
//! the maximally entangled pair), 2..4 = data qudits, 5..6 = ancillas. The
//! dense path simulates the 4-qudit (reference + data) space; the ancilla
//! stage is applied in its measurement basis, where
//! `<m1 m2| QFT†_anc S_syn QFT_anc |00>` reduces exactly to the projector
//! onto data states with `(x1 - x2) mod d = m1`, `(x2 - x3) mod d = m2`.
//! A test validates this reduction against the explicit ancilla circuit.
//!
//! One round applies: QFT on data -> error block (tau steps, data only) ->
//! QFT† -> syndrome measurement summed over all (m1, m2) branches with the
//! Table-II correction `(X†)^{x_i}` (cyclic shift) applied per branch ->
//! disentangling CNOT†s -> ancilla/data reduction.

use num_complex::Complex64;
use rand::Rng;

use crate::channels::{apply_channel_raw, Channel, ErrorModelKind};
use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::metrics::fidelity;
use crate::ops::{cyclic_shift, full_entangled, qudit_qft, QuditDim, RegisterShape};
use crate::state::{
    apply_site_operator, cnot_dagger_permutation, cnot_permutation, partial_trace_keep,
    permute_basis, project_mask, DensityMatrix,
};
use crate::tol;
use crate::trajectory::{apply_site_to_vector, ratio_estimate, TrajectoryEstimate, WeightedEnsemble};

/// Number of redundant (data) qudits.
pub const N_DATA: usize = 3;
/// Number of stabilizers = number of ancillas.
pub const N_SYNDROME: usize = 2;

const REFERENCE_SITE: usize = 1;
const DATA_SITES: [usize; 3] = [2, 3, 4];

/// Default cap on the full-register dimension d^6 for dense rounds
/// (d <= 4); larger d runs through the trajectory sampler.
pub const DEFAULT_QEC_DENSE_CAP: usize = 4096;

fn qec_dense_cap() -> usize {
    std::env::var("QUDITLAB_DENSE_CAP")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_QEC_DENSE_CAP)
}

fn ensure_dense_allowed(d: QuditDim) -> Result<()> {
    let dim = d.get().pow((1 + N_DATA + N_SYNDROME) as u32);
    let cap = qec_dense_cap();
    if dim > cap {
        return Err(Error::DimensionCapExceeded { dim, cap });
    }
    Ok(())
}

/// Whether the full register `d^6` fits under the dense cap.
pub fn dense_round_allowed(d: QuditDim) -> bool {
    ensure_dense_allowed(d).is_ok()
}

/// The error block of one round.
#[derive(Debug, Clone)]
pub enum ErrorSource {
    /// `steps` applications of the model to the data qudits.
    Channel {
        kind: ErrorModelKind,
        p: f64,
        steps: usize,
    },
    /// A single deterministic operator applied once to one data qudit
    /// (1-based, 1..=3) inside the QFT sandwich.
    Injected { data_qudit: usize, op: ComplexMatrix },
}

/// Initial register: maximally entangled (reference, data 1) pair with data
/// qudits 2, 3 in `|0>`.
pub fn initial_register(d: QuditDim) -> Result<DensityMatrix> {
    let shape = RegisterShape::new(1 + N_DATA, d)?;
    let n = d.get();
    let mut amp = vec![Complex64::ZERO; shape.total_dim()];
    let w = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    for i in 0..n {
        amp[shape.index_of(&[i, i, 0, 0])] = w;
    }
    DensityMatrix::from_pure(&amp)
}

/// Repetition encoding `CNOT_{1,2} CNOT_{1,3}` on the data qudits:
/// `|k,0,0> -> |k,k,k>`.
pub fn encode(rho: &DensityMatrix, d: QuditDim) -> Result<DensityMatrix> {
    let shape = RegisterShape::new(1 + N_DATA, d)?;
    let mut m = rho.matrix().clone();
    for target in [3, 4] {
        let perm = cnot_permutation(shape, 2, target)?;
        m = permute_basis(&m, &perm)?;
    }
    DensityMatrix::from_matrix(m)
}

/// Dense syndrome detection operator on data ⊗ ancilla (dimension d^5):
/// `sum_{k1,k2} S_1^{k1} S_2^{k2} ⊗ |k1 k2><k1 k2|` with the stabilizers
/// `S_1 = Z_1 Z_2†`, `S_2 = Z_2 Z_3†`. Diagonal (the stabilizers are), and
/// unitary.
pub fn syndrome_operator(d: QuditDim) -> Result<ComplexMatrix> {
    ensure_dense_allowed(d)?;
    let shape = RegisterShape::new(N_DATA + N_SYNDROME, d)?;
    let total = shape.total_dim();
    let mut m = ComplexMatrix::zeros(total);
    for idx in 0..total {
        let digits = shape.digits(idx);
        let (x1, x2, x3, k1, k2) = (
            digits[0] as i64,
            digits[1] as i64,
            digits[2] as i64,
            digits[3] as i64,
            digits[4] as i64,
        );
        let phase = d.omega_pow(k1 * (x1 - x2) + k2 * (x2 - x3));
        m.set(idx, idx, phase);
    }
    Ok(m)
}

/// Table-II correction powers `(x1, x2, x3)` for syndrome `(m1, m2)`;
/// `None` for patterns outside the table (uncorrectable).
pub fn correction_for(d: QuditDim, m1: usize, m2: usize) -> Option<[usize; 3]> {
    let n = d.get();
    if (m1, m2) == (0, 0) {
        return Some([0, 0, 0]);
    }
    for i in 1..n {
        let neg = (n - i) % n;
        if (m1, m2) == (i, 0) {
            return Some([i, 0, 0]);
        }
        if (m1, m2) == (neg, i) {
            return Some([0, i, 0]);
        }
        if (m1, m2) == (0, neg) {
            return Some([0, 0, i]);
        }
    }
    None
}

/// Output of one dense round.
#[derive(Debug, Clone)]
pub struct RoundOutcome {
    /// Post-round 4-qudit state (reference + data), ancillas merged out.
    pub state: DensityMatrix,
    /// Reduction to (reference ⊗ decoded data qudit).
    pub decoded: DensityMatrix,
    /// Measurement distribution over `(m1, m2)`, lexicographic.
    pub syndrome_weights: Vec<((usize, usize), f64)>,
    /// Probability mass that fell outside Table II (identity applied).
    pub uncorrectable_fraction: f64,
}

/// Basis masks of the d^2 syndrome branches on the 4-qudit register.
fn syndrome_masks(shape: RegisterShape) -> Vec<Vec<bool>> {
    let d = shape.d().get();
    let total = shape.total_dim();
    let mut masks = vec![vec![false; total]; d * d];
    for idx in 0..total {
        let digits = shape.digits(idx);
        let m1 = (digits[1] + d - digits[2]) % d;
        let m2 = (digits[2] + d - digits[3]) % d;
        masks[m1 * d + m2][idx] = true;
    }
    masks
}

/// One full round on an encoded register (dense density-matrix semantics:
/// the measurement is the deterministic sum over all branches).
pub fn qec_round(
    encoded: &DensityMatrix,
    d: QuditDim,
    source: &ErrorSource,
) -> Result<RoundOutcome> {
    ensure_dense_allowed(d)?;
    let shape = RegisterShape::new(1 + N_DATA, d)?;
    if encoded.dim() != shape.total_dim() {
        return Err(Error::DimensionMismatch {
            left: encoded.dim(),
            right: shape.total_dim(),
            context: "qec_round register",
        });
    }
    let f = qudit_qft(d);
    let f_dag = f.dagger();

    let mut m = encoded.matrix().clone();
    for &site in &DATA_SITES {
        m = apply_site_operator(&m, &f, site, shape)?;
    }

    match source {
        ErrorSource::Channel { kind, p, steps } => {
            let channel = Channel::from_model(*kind, d, *p, DATA_SITES.to_vec())?;
            for _ in 0..*steps {
                m = apply_channel_raw(&m, shape, &channel)?;
            }
        }
        ErrorSource::Injected { data_qudit, op } => {
            if !(1..=N_DATA).contains(data_qudit) {
                return Err(Error::IndexOutOfRange {
                    index: *data_qudit,
                    bound: N_DATA,
                    context: "injected error qudit",
                });
            }
            let conj = apply_site_operator(&m, op, 1 + data_qudit, shape)?;
            let tr = conj.trace().re;
            if tr <= tol::ENCODING_SUPPORT {
                return Err(Error::NonUnitTrace {
                    trace: tr,
                    tolerance: tol::ENCODING_SUPPORT,
                    context: "injected error normalization",
                });
            }
            m = conj.scale(Complex64::new(1.0 / tr, 0.0));
        }
    }

    for &site in &DATA_SITES {
        m = apply_site_operator(&m, &f_dag, site, shape)?;
    }

    // syndrome measurement + correction, branch by branch
    let n = d.get();
    let shift_dag = cyclic_shift(d).dagger();
    let mut shift_dag_powers = vec![ComplexMatrix::identity(n)];
    for x in 1..n {
        shift_dag_powers.push(shift_dag_powers[x - 1].matmul(&shift_dag)?);
    }

    let masks = syndrome_masks(shape);
    let mut merged = ComplexMatrix::zeros(shape.total_dim());
    let mut syndrome_weights = Vec::with_capacity(n * n);
    let mut uncorrectable = 0.0;
    for m1 in 0..n {
        for m2 in 0..n {
            let (mut branch, weight) = project_mask(&m, &masks[m1 * n + m2]);
            syndrome_weights.push(((m1, m2), weight));
            if weight <= f64::EPSILON {
                continue;
            }
            let powers = match correction_for(d, m1, m2) {
                Some(p) => p,
                None => {
                    uncorrectable += weight;
                    [0, 0, 0]
                }
            };
            for (slot, &x) in powers.iter().enumerate() {
                if x > 0 {
                    branch =
                        apply_site_operator(&branch, &shift_dag_powers[x], 2 + slot, shape)?;
                }
            }
            merged = merged.add(&branch)?;
        }
    }

    let tr = merged.trace().re;
    if (tr - 1.0).abs() > tol::UNIT_TRACE {
        return Err(Error::NonUnitTrace {
            trace: tr,
            tolerance: tol::UNIT_TRACE,
            context: "branch-summed state",
        });
    }

    // disentangle: CNOT†_{1,3} then CNOT†_{1,2} in data indexing
    for target in [4, 3] {
        let perm = cnot_dagger_permutation(shape, 2, target)?;
        merged = permute_basis(&merged, &perm)?;
    }

    let state = DensityMatrix::from_matrix(merged)?;
    let decoded = DensityMatrix::from_matrix(
        partial_trace_keep(state.matrix(), shape, &[REFERENCE_SITE, 2])?.hermitian_part(),
    )?;
    Ok(RoundOutcome {
        state,
        decoded,
        syndrome_weights,
        uncorrectable_fraction: uncorrectable,
    })
}

/// With/without-QEC comparison for one `(p, tau)` cell.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonCell {
    pub p: f64,
    pub tau: usize,
    pub with_qec: f64,
    pub without_qec: f64,
    pub uncorrectable_fraction: f64,
}

/// How the with-QEC branch is evaluated.
#[derive(Debug, Clone, Copy)]
pub enum QecMode {
    /// Exact density-matrix branch sums (d^6 within the dense cap).
    Dense,
    /// Weighted pure-state trajectories; used above the dense cap.
    Trajectory { trajectories: usize, seed: u64 },
}

/// Bare 2-qudit storage baseline: the full-d entangled pair with the error
/// model on qudit 2 for `tau` steps, no encoding and no projection.
pub fn without_qec_fidelity(
    d: QuditDim,
    kind: ErrorModelKind,
    p: f64,
    tau: usize,
) -> Result<f64> {
    let shape = RegisterShape::new(2, d)?;
    let ini = full_entangled(d)?;
    let channel = Channel::from_model(kind, d, p, vec![2])?;
    let mut m = ini.matrix().clone();
    for _ in 0..tau {
        m = apply_channel_raw(&m, shape, &channel)?;
    }
    fidelity(&ini, &DensityMatrix::from_matrix(m.hermitian_part())?)
}

/// Process fidelity of the decoded pair after one round, dense path.
pub fn with_qec_fidelity_dense(
    d: QuditDim,
    kind: ErrorModelKind,
    p: f64,
    tau: usize,
) -> Result<(f64, f64)> {
    let ini4 = initial_register(d)?;
    let encoded = encode(&ini4, d)?;
    let outcome = qec_round(
        &encoded,
        d,
        &ErrorSource::Channel { kind, p, steps: tau },
    )?;
    let ini2 = full_entangled(d)?;
    let f = fidelity(&ini2, &outcome.decoded)?;
    Ok((f, outcome.uncorrectable_fraction))
}

/// Trajectory estimate of the with-QEC fidelity (for registers above the
/// dense cap, and for dense/trajectory agreement tests).
pub fn with_qec_fidelity_trajectory(
    d: QuditDim,
    kind: ErrorModelKind,
    p: f64,
    tau: usize,
    trajectories: usize,
    seed: u64,
) -> Result<TrajectoryEstimate> {
    let shape = RegisterShape::new(1 + N_DATA, d)?;
    let n = d.get();
    let total = shape.total_dim();

    let mut psi0 = vec![Complex64::ZERO; total];
    let w = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
    for i in 0..n {
        psi0[shape.index_of(&[i, i, 0, 0])] = w;
    }
    // encode
    let mut encoded = vec![Complex64::ZERO; total];
    for target in [3, 4] {
        let perm = cnot_permutation(shape, 2, target)?;
        for (src, &dst) in perm.iter().enumerate() {
            encoded[dst] = psi0[src];
        }
        psi0.copy_from_slice(&encoded);
        encoded.fill(Complex64::ZERO);
    }

    let f = qudit_qft(d);
    let f_dag = f.dagger();
    let mut ensemble = WeightedEnsemble::new(&psi0, shape, trajectories, seed)?;
    let mut scratch = vec![Complex64::ZERO; total];
    for psi in ensemble.states_mut() {
        for &site in &DATA_SITES {
            apply_site_to_vector(psi, &mut scratch, &f, site, shape);
        }
    }

    let ops = kind.operators(d);
    for _ in 0..tau {
        ensemble.step_model(&ops, p, &DATA_SITES);
    }

    let masks = syndrome_masks(shape);
    let shift_dag = cyclic_shift(d).dagger();
    let mut shift_dag_powers = vec![ComplexMatrix::identity(n)];
    for x in 1..n {
        shift_dag_powers.push(shift_dag_powers[x - 1].matmul(&shift_dag)?);
    }
    let disentangle: Vec<Vec<usize>> = [4usize, 3]
        .iter()
        .map(|&t| cnot_dagger_permutation(shape, 2, t))
        .collect::<Result<_>>()?;

    // back to the computational frame before the syndrome measurement
    for psi in ensemble.states_mut() {
        for &site in &DATA_SITES {
            apply_site_to_vector(psi, &mut scratch, &f_dag, site, shape);
        }
    }

    // measurement, correction and decode per trajectory
    let n_traj = ensemble.len();
    for i in 0..n_traj {
        // sample the syndrome from this trajectory's branch weights
        let r: f64 = ensemble.rngs_mut()[i].random();
        let psi = &mut ensemble.states_mut()[i];
        let mut acc = 0.0;
        let mut chosen = n * n - 1;
        for (b, mask) in masks.iter().enumerate() {
            let q: f64 = psi
                .iter()
                .enumerate()
                .filter(|(idx, _)| mask[*idx])
                .map(|(_, a)| a.norm_sqr())
                .sum();
            acc += q;
            if r < acc {
                chosen = b;
                break;
            }
        }
        let mask = &masks[chosen];
        let mut norm = 0.0;
        for (idx, a) in psi.iter_mut().enumerate() {
            if mask[idx] {
                norm += a.norm_sqr();
            } else {
                *a = Complex64::ZERO;
            }
        }
        let inv = 1.0 / norm.sqrt();
        for a in psi.iter_mut() {
            *a *= inv;
        }
        let (m1, m2) = (chosen / n, chosen % n);
        let powers = correction_for(d, m1, m2).unwrap_or([0, 0, 0]);
        for (slot, &x) in powers.iter().enumerate() {
            if x > 0 {
                apply_site_to_vector(psi, &mut scratch, &shift_dag_powers[x], 2 + slot, shape);
            }
        }
        for perm in &disentangle {
            scratch.fill(Complex64::ZERO);
            for (src, &dst) in perm.iter().enumerate() {
                scratch[dst] = psi[src];
            }
            psi.copy_from_slice(&scratch);
        }
    }

    // fidelity of the reduced (reference, data 1) state against the
    // entangled pair: for a pure register state this is
    // sum_{x3,x4} |<ini2 ⊗ x3 x4 | psi>|^2
    let right_dim = n * n;
    let wamp = 1.0 / (n as f64).sqrt();
    let pairs: Vec<(f64, f64)> = ensemble
        .states()
        .iter()
        .zip(ensemble.weights())
        .map(|(psi, &wt)| {
            let mut fsum = 0.0;
            for rest in 0..right_dim {
                let mut overlap = Complex64::ZERO;
                for i in 0..n {
                    let idx = (i * n + i) * right_dim + rest;
                    overlap += psi[idx] * wamp;
                }
                fsum += overlap.norm_sqr();
            }
            (wt * fsum, wt)
        })
        .collect();
    Ok(ratio_estimate(&pairs))
}

/// Sweeps the p-grid for each tau, producing with/without fidelity pairs.
pub fn compare_with_without(
    kind: ErrorModelKind,
    d: QuditDim,
    p_grid: &[f64],
    taus: &[usize],
    mode: QecMode,
) -> Result<Vec<ComparisonCell>> {
    let mut out = Vec::with_capacity(p_grid.len() * taus.len());
    for &tau in taus {
        for &p in p_grid {
            let without_qec = without_qec_fidelity(d, kind, p, tau)?;
            let (with_qec, uncorrectable_fraction) = match mode {
                QecMode::Dense => with_qec_fidelity_dense(d, kind, p, tau)?,
                QecMode::Trajectory { trajectories, seed } => {
                    let est = with_qec_fidelity_trajectory(d, kind, p, tau, trajectories, seed)?;
                    (est.value, f64::NAN)
                }
            };
            out.push(ComparisonCell {
                p,
                tau,
                with_qec,
                without_qec,
                uncorrectable_fraction,
            });
        }
    }
    Ok(out)
}
