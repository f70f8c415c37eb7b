//! The discrete-time quantum map and the three error models.
//!
//! One application of the per-site map is
//!
//! ```text
//! E_p(rho) = (1 - p) rho + (p/K) sum_k U_k rho U_k† / Tr[U_k rho U_k†]
//! ```
//!
//! with the per-term trace normalization implemented literally. For unitary
//! error operators the denominator is identically 1 and a deviation beyond
//! tolerance signals upstream state corruption (`NonUnitTrace`). The X'
//! operator is Hermitian but not unitary for `d >= 3`, so there the
//! denominator genuinely renormalizes each fired term and the map is
//! nonlinear in `rho`.
//!
//! Multi-site models compose the per-site map over the target sites in
//! ascending site order. For unitary operator sets the composition is
//! order-independent; the X' normalization makes it weakly order-dependent,
//! which is why the order is fixed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::ops::{self, QuditDim, RegisterShape};
use crate::state::{apply_site_operator, DensityMatrix};
use crate::tol;

/// The three single-qudit error models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorModelKind {
    /// Phase errors: K = 1, operator Z.
    #[serde(rename = "z")]
    Z,
    /// Symmetric hop errors: K = 1, operator X'.
    #[serde(rename = "xprime")]
    XPrime,
    /// Both: K = 2, operators {X', Z}.
    #[serde(rename = "xprime-plus-z")]
    XPrimePlusZ,
}

impl ErrorModelKind {
    /// Error operators of this model for qudit dimension `d`.
    pub fn operators(self, d: QuditDim) -> Vec<ComplexMatrix> {
        match self {
            ErrorModelKind::Z => vec![ops::gen_z(d)],
            ErrorModelKind::XPrime => vec![ops::gen_x_prime(d)],
            ErrorModelKind::XPrimePlusZ => vec![ops::gen_x_prime(d), ops::gen_z(d)],
        }
    }

    /// Number of error channels K.
    pub fn kraus_count(self) -> usize {
        match self {
            ErrorModelKind::Z | ErrorModelKind::XPrime => 1,
            ErrorModelKind::XPrimePlusZ => 2,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ErrorModelKind::Z => "z",
            ErrorModelKind::XPrime => "xprime",
            ErrorModelKind::XPrimePlusZ => "xprime-plus-z",
        }
    }
}

impl std::str::FromStr for ErrorModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z" => Ok(ErrorModelKind::Z),
            "xprime" | "x" => Ok(ErrorModelKind::XPrime),
            "xprime-plus-z" | "xz" => Ok(ErrorModelKind::XPrimePlusZ),
            other => Err(Error::InvalidInput(format!(
                "unknown error model '{other}' (expected z | xprime | xprime-plus-z)"
            ))),
        }
    }
}

/// One error operator together with its precomputed unitarity flag.
#[derive(Debug, Clone)]
struct ErrorOperator {
    op: ComplexMatrix,
    unitary: bool,
}

/// Convex mixture of conjugations applied to chosen sites of a register.
#[derive(Debug, Clone)]
pub struct Channel {
    p: f64,
    operators: Vec<ErrorOperator>,
    target_sites: Vec<usize>,
}

impl Channel {
    /// Builds a channel from explicit single-qudit error operators.
    ///
    /// Operators need not be unitary (X' is Hermitian only); they must be
    /// finite, nonzero and of equal dimension.
    pub fn new(p: f64, operators: Vec<ComplexMatrix>, target_sites: Vec<usize>) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidInput(format!(
                "error probability {p} outside [0, 1]"
            )));
        }
        if operators.is_empty() {
            return Err(Error::InvalidInput("channel needs K >= 1 operators".into()));
        }
        let dim = operators[0].dim();
        let mut tagged = Vec::with_capacity(operators.len());
        for op in operators {
            if op.dim() != dim {
                return Err(Error::DimensionMismatch {
                    left: op.dim(),
                    right: dim,
                    context: "channel operators",
                });
            }
            if !op.is_finite() {
                return Err(Error::NonFiniteEntry("channel operator"));
            }
            if op.max_abs() == 0.0 {
                return Err(Error::InvalidInput("channel operator is zero".into()));
            }
            let unitary = op.unitarity_deviation() <= tol::UNITARITY;
            tagged.push(ErrorOperator { op, unitary });
        }
        Ok(Self {
            p,
            operators: tagged,
            target_sites,
        })
    }

    /// Channel for one of the paper's models acting on the given sites.
    pub fn from_model(
        kind: ErrorModelKind,
        d: QuditDim,
        p: f64,
        target_sites: Vec<usize>,
    ) -> Result<Self> {
        Channel::new(p, kind.operators(d), target_sites)
    }

    pub fn error_prob(&self) -> f64 {
        self.p
    }

    pub fn kraus_count(&self) -> usize {
        self.operators.len()
    }

    pub fn target_sites(&self) -> &[usize] {
        &self.target_sites
    }

    /// One application of the per-site map at `site`.
    pub fn apply_single_site(
        &self,
        rho: &DensityMatrix,
        site: usize,
        shape: RegisterShape,
    ) -> Result<DensityMatrix> {
        let out = self.apply_single_site_raw(rho.matrix(), site, shape)?;
        DensityMatrix::from_matrix(out)
    }

    /// Same map on a raw matrix; used by the evolution loop to avoid
    /// re-validating on every step.
    pub(crate) fn apply_single_site_raw(
        &self,
        rho: &ComplexMatrix,
        site: usize,
        shape: RegisterShape,
    ) -> Result<ComplexMatrix> {
        let tr_in = rho.trace().re;
        if (tr_in - 1.0).abs() > tol::UNIT_TRACE {
            return Err(Error::NonUnitTrace {
                trace: tr_in,
                tolerance: tol::UNIT_TRACE,
                context: "channel input state",
            });
        }
        let k = self.operators.len() as f64;
        let mut out = rho.scale((1.0 - self.p).into());
        for eop in &self.operators {
            let conj = apply_site_operator(rho, &eop.op, site, shape)?;
            let denom = conj.trace().re;
            if eop.unitary && (denom - 1.0).abs() > tol::UNIT_TRACE {
                // for a unitary operator this denominator is identically 1;
                // renormalizing silently would mask upstream corruption
                return Err(Error::NonUnitTrace {
                    trace: denom,
                    tolerance: tol::UNIT_TRACE,
                    context: "unitary error term normalization",
                });
            }
            if denom <= tol::ENCODING_SUPPORT {
                return Err(Error::NonUnitTrace {
                    trace: denom,
                    tolerance: tol::ENCODING_SUPPORT,
                    context: "error term normalization underflow",
                });
            }
            out.axpy(self.p / (k * denom), &conj);
        }
        Ok(out)
    }
}

/// Applies the model's per-site map to every listed site, in ascending
/// site order.
pub fn apply_model(
    rho: &DensityMatrix,
    shape: RegisterShape,
    kind: ErrorModelKind,
    p: f64,
    sites: &[usize],
) -> Result<DensityMatrix> {
    let mut ordered = sites.to_vec();
    ordered.sort_unstable();
    let ch = Channel::from_model(kind, shape.d(), p, ordered)?;
    let out = apply_channel_raw(rho.matrix(), shape, &ch)?;
    DensityMatrix::from_matrix(out)
}

pub(crate) fn apply_channel_raw(
    rho: &ComplexMatrix,
    shape: RegisterShape,
    channel: &Channel,
) -> Result<ComplexMatrix> {
    let mut state = rho.clone();
    for &site in channel.target_sites() {
        state = channel.apply_single_site_raw(&state, site, shape)?;
    }
    Ok(state)
}

/// Evolves `rho0` for `steps` applications of the map, streaming each state
/// (including the initial one) to `visit`.
pub fn evolve_visit(
    rho0: &DensityMatrix,
    shape: RegisterShape,
    channel: &Channel,
    steps: usize,
    mut visit: impl FnMut(usize, &ComplexMatrix) -> Result<()>,
) -> Result<()> {
    let mut state = rho0.matrix().clone();
    visit(0, &state)?;
    for t in 1..=steps {
        state = apply_channel_raw(&state, shape, channel)?;
        let tr = state.trace().re;
        if (tr - 1.0).abs() > tol::UNIT_TRACE {
            return Err(Error::NonUnitTrace {
                trace: tr,
                tolerance: tol::UNIT_TRACE,
                context: "evolved state",
            });
        }
        visit(t, &state)?;
    }
    Ok(())
}

/// Evolves and collects the whole time series `rho_0 .. rho_steps`.
pub fn evolve(
    rho0: &DensityMatrix,
    shape: RegisterShape,
    channel: &Channel,
    steps: usize,
) -> Result<Vec<DensityMatrix>> {
    let mut out = Vec::with_capacity(steps + 1);
    evolve_visit(rho0, shape, channel, steps, |_, m| {
        out.push(DensityMatrix::from_matrix(m.clone())?);
        Ok(())
    })?;
    Ok(out)
}
