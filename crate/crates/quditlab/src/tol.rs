//! Numerical tolerances used across the crate.
//!
//! Grouped here so every module asserts against the same thresholds.

/// Admitted Hermiticity deviation before an eigendecomposition refuses input.
pub const HERMITICITY: f64 = 1e-10;

/// Eigenvalues in `[-PSD_EIGENVALUE, 0)` are treated as roundoff and clamped
/// to zero; anything lower is a genuine PSD violation.
pub const PSD_EIGENVALUE: f64 = 1e-10;

/// States drift off the PSD cone under repeated floating-point maps; metrics
/// accept eigenvalues down to this looser bound before clamping.
pub const STATE_PSD: f64 = 1e-9;

/// Admitted deviation of a density-matrix trace from 1.
pub const UNIT_TRACE: f64 = 1e-9;

/// Unitarity check threshold for channel operators and gate constructors.
pub const UNITARITY: f64 = 1e-10;

/// Eigenvalues at or below this are numerically zero: they contribute
/// nothing to `-sum(l ln l)` and are truncated before square roots (a
/// spurious 1e-16 eigenvalue would otherwise inject a 1e-8 root).
pub const EIGENVALUE_FLOOR: f64 = 1e-14;

/// Encoding-subspace weight below this is total leakage.
pub const ENCODING_SUPPORT: f64 = 1e-12;
