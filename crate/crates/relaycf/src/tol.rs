//! Numerical tolerances used across the crate.

/// A probability vector must sum to 1 within this.
pub const SUM_ONE: f64 = 1e-12;

/// Probability entries may undershoot zero by rounding down to this floor;
/// they are clamped to 0 on use, anything lower is rejected.
pub const ENTRY_FLOOR: f64 = -1e-15;

/// Conditional mutual information this far below zero is rounding residue
/// and clamps to 0; lower values indicate a broken invariant.
pub const CMI_FLOOR: f64 = -1e-12;

/// Absolute tolerance for algebraic identities between information terms.
pub const IDENTITY: f64 = 1e-9;

/// Strictness margin for feasibility tests: "value >= 0" accepts values
/// above `-MARGIN`, "value > 0" requires values above `MARGIN`.
pub const MARGIN: f64 = 1e-9;

/// Feasibility residual allowed on linear-program solutions.
pub const LP_RESIDUAL: f64 = 1e-9;

/// Two independently optimized suprema are considered equal within this.
pub const OPT_MATCH: f64 = 1e-3;

/// Engine results must match naive reference computations within this.
pub const ORACLE: f64 = 1e-10;
