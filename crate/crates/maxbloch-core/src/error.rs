//! Typed error model for the computational core.
//!
//! Every precondition violation and every numerical failure surfaces as a
//! [`CoreError`] variant carrying the quantity that failed; library code
//! never panics on inputs reachable through the public API.

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, CoreError>;

/// Errors produced by the computational core.
#[derive(Debug, Clone, Error)]
pub enum CoreError {
    /// Lattice basis is singular or numerically close to it.
    #[error("lattice basis is singular (|det| = {det:.3e})")]
    SingularLattice { det: f64 },

    /// Plane-wave shell would exceed the configured maximum size.
    #[error("plane-wave basis too large: cutoff yields {count} vectors (maximum {max})")]
    BasisTooLarge { count: usize, max: usize },

    /// Invalid Brillouin-zone mesh specification.
    #[error("invalid k-mesh: {detail}")]
    InvalidMesh { detail: String },

    /// Material samples violate Hermiticity or positivity requirements.
    #[error("invalid material weights: {detail}")]
    InvalidWeights { detail: String },

    /// Invalid profile parameters (radius, amplitude, dimensions, ...).
    #[error("invalid material profile: {detail}")]
    InvalidProfile { detail: String },

    /// Real-space grid cannot resolve a requested Fourier coefficient.
    #[error(
        "grid cannot resolve Fourier coefficient: axis {axis} needs frequency {needed}, \
         grid supports |m| <= {supported}"
    )]
    ResolutionTooCoarse {
        axis: usize,
        needed: usize,
        supported: usize,
    },

    /// A matrix that must be Hermitian is not, beyond tolerance.
    #[error("non-Hermitian input: residual {residual:.3e} exceeds {tol:.3e}")]
    NonHermitian { residual: f64, tol: f64 },

    /// Cholesky factorization of a Gram matrix failed (metric not positive
    /// definite at working precision).
    #[error("Gram matrix is not positive definite ({context})")]
    IndefiniteGram { context: String },

    /// Eigensolver failed to meet the pencil residual bound.
    #[error("eigensolver residual {residual:.3e} exceeds {tol:.3e} ({context})")]
    EigensolverFailure {
        residual: f64,
        tol: f64,
        context: String,
    },

    /// Zero-mode count disagrees with the analytic gradient-field dimension.
    #[error("zero-mode count {found} does not match the expected {expected}")]
    ZeroModeCount { found: usize, expected: usize },

    /// Input vector has longitudinal (gradient-field) content beyond tolerance.
    #[error("input is not transversal: longitudinal fraction {leakage:.3e} exceeds {tol:.3e}")]
    NotTransversal { leakage: f64, tol: f64 },

    /// Inverse square root requested across an eigenvalue too close to zero.
    #[error(
        "ill-conditioned inverse square root: transversal eigenvalue {eigenvalue:.3e} \
         below cutoff {cutoff:.3e}"
    )]
    IllConditionedInverseSqrt { eigenvalue: f64, cutoff: f64 },

    /// State violates the frequency constraint required for propagation.
    #[error("unphysical state: {detail}")]
    UnphysicalState { detail: String },

    /// Band family specification is empty, non-contiguous or out of range.
    #[error("invalid band family: {detail}")]
    InvalidBandFamily { detail: String },

    /// A Fukui–Hatsugai–Suzuki link determinant collapsed; the discrete
    /// Chern number is not defined on this mesh.
    #[error(
        "k-mesh too coarse for the link-variable method: |det| = {link_modulus:.3e} \
         at plaquette link ({i}, {j}); refine the mesh"
    )]
    MeshTooCoarse {
        link_modulus: f64,
        i: usize,
        j: usize,
    },

    /// Overlap between consecutive frames fell below the alignment threshold.
    #[error(
        "gauge alignment failure: consecutive overlap {overlap:.3e} below {threshold:.3e}; \
         refine the mesh"
    )]
    GaugeAlignmentFailure { overlap: f64, threshold: f64 },

    /// Projected frame lost rank (degenerate projection).
    #[error("degenerate projection: {detail}")]
    DegenerateProjection { detail: String },

    /// Rounded Chern numbers disagree between two transverse slices of the
    /// same subtorus — the band family is not uniformly gapped over the mesh.
    #[error(
        "topology inconsistency on the ({:?}) subtorus: rounded Chern {} at slice {} \
         vs {} at slice {}",
        axes, values[0], slices[0], values[1], slices[1]
    )]
    TopologyInconsistency {
        axes: [usize; 2],
        slices: [usize; 2],
        values: [i64; 2],
    },

    /// Band-projected decomposition left a residual beyond tolerance.
    #[error("decomposition leakage {leakage:.3e} exceeds {tol:.3e}")]
    DecompositionLeakage { leakage: f64, tol: f64 },

    /// Mismatched dimensions between interacting objects.
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: String,
    },
}
