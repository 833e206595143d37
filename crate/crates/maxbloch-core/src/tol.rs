//! Centralized numerical tolerances.
//!
//! Every threshold used by the library and its acceptance suite is defined
//! here with its rationale; no other module hard-codes a magic tolerance.
//! Thresholds fall into three families:
//!
//! * **Exactness** — identities that hold to rounding error in f64
//!   (Hermiticity of assembled matrices, eigensolver residuals, chiral
//!   pairing). Bounds sit a few orders above machine epsilon to absorb
//!   accumulation over `O(n³)` arithmetic.
//! * **Structural** — classification cutoffs that separate exact-zero
//!   structure from genuine spectrum (zero-mode labeling, transversality).
//! * **Method** — discretization-level agreement between independent
//!   numerical routes (finite-difference curvature vs. link variables).

/// Relative Hermiticity residual allowed in assembled Gram/stiffness
/// matrices and sampled material tensors. These are Hermitian by
/// construction; the bound only absorbs rounding.
pub const HERMITICITY_TOL: f64 = 1e-12;

/// Per-eigenpair pencil residual `‖A v − λ S v‖ ≤ RESIDUAL_TOL · ‖A‖`
/// enforced after every fiber solve.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-10;

/// Relative cutoff below which an eigenvalue is classified as a zero mode:
/// `|λ| ≤ ZERO_TOL_REL · max|λ|` at the same k.
pub const ZERO_TOL_REL: f64 = 1e-8;

/// Maximum longitudinal fraction tolerated in inputs declared transversal.
pub const TRANSVERSALITY_TOL: f64 = 1e-8;

/// Relative cutoff for boundary membership in the plane-wave shell:
/// `|G|² ≤ cutoff² (1 + SHELL_BOUNDARY_TOL)`. This keeps shells whose
/// outermost vectors satisfy `|G| = cutoff` exactly (e.g. a cubic lattice
/// with cutoff 2π) stable against rounding in `|G|`.
pub const SHELL_BOUNDARY_TOL: f64 = 1e-9;

/// Default maximum plane-wave basis size; larger requests are rejected
/// rather than silently attempted.
pub const MAX_BASIS_DEFAULT: usize = 20_000;

/// Free-space dispersion must match `|k+G|` to this relative accuracy.
pub const FREE_SPACE_REL_TOL: f64 = 1e-10;

/// Relative agreement between first-order frequencies and consistent-mode
/// wave-operator frequencies (`|ω_n − ω_n^{wave}| ≤ tol · ω_n`).
pub const BAND_EQUALITY_REL_TOL: f64 = 1e-10;

/// Weighted-norm bound for the reconstruction identities
/// `ι ∘ pr = id` and `pr ∘ ι = id` on eigenvectors (phase-aligned).
pub const RECONSTRUCTION_TOL: f64 = 1e-9;

/// The sign-operator Rayleigh quotient of a positive-band eigenvector must
/// be at least `1 − SGN_QUOTIENT_TOL`.
pub const SGN_QUOTIENT_TOL: f64 = 1e-8;

/// Unitarity defect allowed for `U_EH`: `|⟨Uφ, Uψ⟩_ε − ⟨φ, ψ⟩_μ|` on
/// normalized transversal vectors.
pub const UNITARITY_TOL: f64 = 1e-9;

/// Relative operator-level residual for the intertwining identity
/// `M_EE² U_EH = U_EH M_HH²` on the transversal subspace.
pub const INTERTWINING_TOL: f64 = 1e-8;

/// Chiral-symmetry residual per mesh point, relative to the largest
/// frequency at that k.
pub const CHIRAL_TOL: f64 = 1e-9;

/// Agreement of fiber spectra under re-indexing by a reciprocal shift
/// (equivariance), on the overlapping sub-basis.
pub const EQUIVARIANCE_TOL: f64 = 1e-8;

/// Distance from a raw Chern number to the nearest integer.
pub const CHERN_TOL: f64 = 1e-6;

/// Change in a raw Chern number under a random per-k unitary gauge mixing.
pub const GAUGE_INVARIANCE_TOL: f64 = 1e-12;

/// Smallest link-determinant modulus admissible in the link-variable
/// (Fukui–Hatsugai–Suzuki) method.
pub const LINK_DET_MIN: f64 = 1e-12;

/// Minimum overlap between consecutive frames during gauge alignment.
pub const ALIGNMENT_OVERLAP_MIN: f64 = 0.1;

/// Finite-difference Berry-curvature integral vs. link-variable Chern
/// number at a 16×16 subtorus mesh.
pub const BERRY_FD_TOL_16: f64 = 0.05;

/// Same comparison at 32×32.
pub const BERRY_FD_TOL_32: f64 = 0.01;

/// Magnitude of the finite-difference curvature integral on a real-weight
/// (time-reversal-symmetric) medium at a 16×16 mesh, where the exact
/// answer is zero.
pub const BERRY_FD_REAL_ZERO_TOL: f64 = 0.01;

/// Relative energy (weighted-norm) drift over a propagation run.
pub const ENERGY_DRIFT_TOL: f64 = 1e-10;

/// Weighted-norm error allowed when rebuilding the magnetic trace from the
/// electric trace of a propagated state.
pub const MAGNETIC_TRACE_TOL: f64 = 1e-8;

/// Maximum band-projection leakage in trace decompositions.
pub const DECOMPOSITION_LEAKAGE_TOL: f64 = 1e-6;

/// The electric-only coefficient recipe must differ from the true
/// first-order coefficients by more than this in its designed counterexample.
pub const COEFFICIENT_CAVEAT_MIN: f64 = 1e-3;

/// Default gap margin below which a spectral gap is not considered open.
pub const GAP_TOL_DEFAULT: f64 = 1e-6;

/// Singular lattice determinant cutoff.
pub const LATTICE_DET_MIN: f64 = 1e-12;

/// Largest admissible raised-cosine smoothing width, as a fraction of the
/// first lattice vector length (profiles are meant to be perturbative
/// boundary smoothings, not full-domain blurs).
pub const SMOOTHING_MAX_FRACTION: f64 = 0.5;
