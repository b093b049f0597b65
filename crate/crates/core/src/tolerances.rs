//! Numerical tolerances used across the crate.
//!
//! Every threshold lives here so that tests, the `verify` command and the
//! library agree on what "holds" means.

/// Relative Hermitian-ness required by [`crate::linalg::herm_eig`].
pub const HERMITIAN_REL: f64 = 1e-12;

/// Off-diagonal Frobenius mass (relative) at which cyclic Jacobi stops.
pub const JACOBI_OFFDIAG_REL: f64 = 1e-15;

/// Sweep budget for cyclic Jacobi before reporting `NoConvergence`.
pub const JACOBI_MAX_SWEEPS: usize = 64;

/// Eigen-decomposition reconstruction residual, relative to `max(1, ‖M‖_F)`.
pub const EIG_RECON_REL: f64 = 1e-10;

/// Column-rank threshold: `σ_min ≤ RANK_REL · σ_max` means rank deficient.
pub const RANK_REL: f64 = 1e-12;

/// Condition number of `M*M` above which the pseudoinverse switches from
/// Cholesky to the eigen-decomposition route.
pub const CHOLESKY_MAX_COND: f64 = 1e8;

/// `pinv(M)·M = I` residual (Frobenius).
pub const PINV_RESIDUAL: f64 = 1e-9;

/// Unit-norm tolerance for base vectors and Hermitian check of generators.
pub const UNIT_NORM: f64 = 1e-12;

/// Row-norm and frame-path closure tolerance for analysis operators.
pub const FRAME_ROW: f64 = 1e-10;

/// Relative Frobenius tolerance for the frame-factor lemma identities.
pub const LEMMA_REL: f64 = 1e-9;

/// Relative Frobenius tolerance for the full decimation expansion.
pub const EXPANSION_REL: f64 = 1e-8;

/// Additive slack for frame-bound, variation-bound and error-bound checks.
pub const BOUND_SLACK: f64 = 1e-9;

/// Lower frame const below which a base vector is considered degenerate.
pub const DEGENERATE_BASE: f64 = 1e-12;

/// Per-entry absolute tolerance on the noise-shaping identity `y − q = Δ^r u`,
/// scaled by `‖y‖_∞ + Lδ`.
pub const RECURSION_REL: f64 = 1e-12;

/// Relative tolerance for the error-chain equality.
pub const ERROR_CHAIN_REL: f64 = 1e-9;

/// Dual-frame residual `‖FΦ − I‖_F`.
pub const DUAL_RESIDUAL: f64 = 1e-9;

/// Relative tolerance for floating-point evaluation of exact identities
/// involving logarithms (bit-rate exponent).
pub const EXPONENT_REL: f64 = 1e-12;
