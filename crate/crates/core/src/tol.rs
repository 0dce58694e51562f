//! Central numeric tolerances.
//!
//! Every module draws its thresholds from here so that a tolerance is never
//! redefined ad hoc at a call site. The values fall into three regimes:
//! tight residual checks for decompositions we compute ourselves, looser
//! structural predicates applied to user-supplied data, and grouping
//! thresholds for clustering nearly equal spectra.

/// Reconstruction residual for decompositions (SVD, Hermitian eigen).
pub const DECOMP_RESIDUAL: f64 = 1e-10;

/// Structural predicates: unitarity, orthonormality, proportionality to the
/// identity, projector checks.
pub const STRUCTURAL: f64 = 1e-9;

/// Norm / trace / Hermiticity deviation allowed in state constructors.
pub const STATE: f64 = 1e-10;

/// Threshold below which a Schmidt coefficient counts as zero.
pub const NONZERO_SCHMIDT: f64 = 1e-8;

/// Grouping tolerance when clustering eigenvalues or Schmidt coefficients
/// into blocks of equal value.
pub const SPECTRUM_CLUSTER: f64 = 1e-8;

/// Residual allowed when verifying a recovered block structure reassembles
/// the input density matrix.
pub const BLOCK_RECONSTRUCT: f64 = 1e-8;

/// Outcome probabilities below this are reported as zero and carry no
/// correction.
pub const PROB_CUTOFF: f64 = 1e-12;

/// Eigenvalues of a density matrix below this are treated as zero rank.
pub const EIGENVALUE_CUTOFF: f64 = 1e-10;

/// Comparison tolerance for matching corrections up to a global phase.
pub const PHASE_MATCH: f64 = 1e-8;

/// Scale below which a conditional map is treated as identically zero
/// (the eigenstate does not participate in that outcome).
pub const ZERO_BLOCK: f64 = 1e-8;
