//! Fidelity, encoded process fidelity, von Neumann entropy and entropy
//! production of the total/encoding/non-encoding subspaces.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{sqrt_clamped, ComplexMatrix};
use crate::state::DensityMatrix;
use crate::tol;

/// `Tr[a b]` for Hermitian a, b.
fn overlap(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut sum = 0.0;
    for i in 0..n {
        for j in 0..n {
            sum += (a.get(i, j) * b.get(j, i)).re;
        }
    }
    sum
}

/// Uhlmann fidelity `(Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2`.
///
/// Inputs may sit off the PSD cone by up to [`tol::STATE_PSD`] from
/// accumulated evolution roundoff; small negative eigenvalues are clamped.
/// When either state is pure the expression reduces exactly to
/// `Tr[rho sigma]` (for rank-1 rho, `sqrt(rho) = rho`), which skips the
/// spectral decompositions.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            left: rho.dim(),
            right: sigma.dim(),
            context: "fidelity",
        });
    }
    if rho.purity() >= 1.0 - 1e-12 || sigma.purity() >= 1.0 - 1e-12 {
        return Ok(overlap(rho.matrix(), sigma.matrix()).max(0.0));
    }
    let s = sqrt_clamped(rho.matrix(), tol::STATE_PSD)?;
    let inner = s
        .matmul(sigma.matrix())?
        .matmul(&s)?
        .hermitian_part();
    let root = sqrt_clamped(&inner, tol::STATE_PSD)?;
    let tr = root.trace().re;
    Ok(tr * tr)
}

/// Process fidelity on the encoding subspace:
/// `F(rho_ini, P rho_t P / Tr[P rho_t P])`.
pub fn encoded_process_fidelity(
    rho_ini: &DensityMatrix,
    rho_t: &DensityMatrix,
    p_en: &ComplexMatrix,
) -> Result<f64> {
    let projected = p_en.matmul(rho_t.matrix())?.matmul(p_en)?;
    let weight = projected.trace().re;
    if weight <= tol::ENCODING_SUPPORT {
        return Err(Error::EmptyEncodingSupport {
            trace: weight,
            threshold: tol::ENCODING_SUPPORT,
        });
    }
    let normalized = DensityMatrix::from_matrix(
        projected
            .scale(Complex64::new(1.0 / weight, 0.0))
            .hermitian_part(),
    )?;
    fidelity(rho_ini, &normalized)
}

/// Von Neumann entropy `-Tr[m ln m]` in nats.
///
/// Accepts unnormalized projections (trace <= 1); eigenvalues at or below
/// [`tol::EIGENVALUE_FLOOR`] contribute zero (`0 ln 0 := 0`), and the
/// zero matrix has entropy zero.
pub fn von_neumann_entropy(m: &ComplexMatrix) -> Result<f64> {
    if m.max_abs() == 0.0 {
        return Ok(0.0);
    }
    let eig = m.hermitian_part().hermitian_eig()?;
    let min = eig.eigenvalues[0];
    if min < -tol::STATE_PSD {
        return Err(Error::NotPsd {
            min_eigenvalue: min,
            tolerance: tol::STATE_PSD,
        });
    }
    Ok(eig
        .eigenvalues
        .iter()
        .filter(|&&l| l > tol::EIGENVALUE_FLOOR)
        .map(|&l| -l * l.ln())
        .sum())
}

/// Whether subspace entropies use the literal unnormalized projections
/// `P rho P` (the paper's definition) or renormalize them first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SubspaceWeighting {
    #[default]
    Unnormalized,
    Normalized,
}

/// Entropies and per-step entropy productions of one evolution.
///
/// `ds_*[t] = s_*[t] - s_*[t-1]` with `s_*[-1] := 0`, so `ds_*[0] = s_*[0]`.
#[derive(Debug, Clone)]
pub struct EntropySeries {
    pub s_total: Vec<f64>,
    pub s_en: Vec<f64>,
    pub s_nonen: Vec<f64>,
    pub ds_total: Vec<f64>,
    pub ds_en: Vec<f64>,
    pub ds_nonen: Vec<f64>,
}

fn productions(s: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    s.iter()
        .map(|&v| {
            let d = v - prev;
            prev = v;
            d
        })
        .collect()
}

/// Computes the three entropy series for a state trajectory.
pub fn entropy_productions(
    states: &[DensityMatrix],
    p_en: &ComplexMatrix,
    q_en: &ComplexMatrix,
    weighting: SubspaceWeighting,
) -> Result<EntropySeries> {
    let mut s_total = Vec::with_capacity(states.len());
    let mut s_en = Vec::with_capacity(states.len());
    let mut s_nonen = Vec::with_capacity(states.len());
    for st in states {
        if st.dim() != p_en.dim() {
            return Err(Error::DimensionMismatch {
                left: st.dim(),
                right: p_en.dim(),
                context: "entropy_productions",
            });
        }
        s_total.push(von_neumann_entropy(st.matrix())?);
        for (proj, out) in [(p_en, &mut s_en), (q_en, &mut s_nonen)] {
            let mut sub = proj.matmul(st.matrix())?.matmul(proj)?;
            if weighting == SubspaceWeighting::Normalized {
                let w = sub.trace().re;
                if w > tol::ENCODING_SUPPORT {
                    sub = sub.scale(Complex64::new(1.0 / w, 0.0));
                }
            }
            out.push(von_neumann_entropy(&sub)?);
        }
    }
    Ok(EntropySeries {
        ds_total: productions(&s_total),
        ds_en: productions(&s_en),
        ds_nonen: productions(&s_nonen),
        s_total,
        s_en,
        s_nonen,
    })
}
