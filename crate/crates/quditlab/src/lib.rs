//! quditlab: decoherence of logical qubits embedded in qudits.
//!
//! A dense density-matrix simulator for a d-level system hosting a logical
//! qubit in two of its levels, together with the analysis tools around it:
//!
//! - generalized Pauli operators X' (symmetric hop, no wraparound) and Z,
//!   qudit QFT and modular CNOT ([`ops`]);
//! - the discrete-time error map `(1-p) rho + (p/K) sum_k U_k rho U_k† /
//!   Tr[U_k rho U_k†]` with Z-, X'- and X'+Z-type models ([`channels`]);
//! - Uhlmann fidelity, encoded process fidelity and entropy production of
//!   the encoding/non-encoding subspaces ([`metrics`]);
//! - Kohlrausch (stretched exponential) lifetime fitting ([`fit`]);
//! - a 3-qudit repetition code with QFT-sandwiched errors, syndrome
//!   extraction and correction lookup ([`qec`]);
//! - weighted pure-state trajectory sampling ([`trajectory`]) and sweep
//!   orchestration ([`experiments`]).
//!
//! Basis convention everywhere: registers are uniform (`n` qudits of `d`
//! levels), site 1 is the slowest-varying tensor index, and matrices are
//! stored row-major ([`linalg::ComplexMatrix`]).

pub mod channels;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod linalg;
pub mod metrics;
pub mod ops;
pub mod qec;
pub mod state;
pub mod tol;
pub mod trajectory;

pub use channels::{apply_model, evolve, evolve_visit, Channel, ErrorModelKind};
pub use error::{Error, Result};
pub use experiments::{run, ExperimentSpec, Family, ResultRow, CSV_HEADER};
pub use fit::{fit, kohlrausch, FidelitySeries, KohlrauschFit};
pub use linalg::{ComplexMatrix, HermitianEig};
pub use metrics::{
    encoded_process_fidelity, entropy_productions, fidelity, von_neumann_entropy, EntropySeries,
    SubspaceWeighting,
};
pub use ops::{
    embed_at, encoding_projectors, full_entangled, gen_x_prime, gen_z, logical_bell, qudit_cnot,
    qudit_cnot_dagger, qudit_qft, LogicalLevels, QuditDim, RegisterShape,
};
pub use state::DensityMatrix;
