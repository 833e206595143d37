//! Spectral analysis of lossless Maxwell operators in periodic media.
//!
//! This crate discretizes the auxiliary first-order Maxwell operator
//! `M = W⁻¹ Rot` of a periodic, lossless, positive-index medium
//! (`W = diag(ε, μ)` Hermitian with eigenvalues in `[c, C]`, `0 < c ≤ C`)
//! by plane-wave expansion of its Bloch fibers, and builds everything the
//! operator's spectral theory promises on top of that:
//!
//! * **Band structures** — generalized Hermitian pencils `Rot(k) Ψ = ω W Ψ`
//!   (first order, 6N unknowns) and the equivalent second-order wave pencils
//!   `A_E ψ = ω² S_ε ψ`, `A_H ψ = ω² S_μ ψ` (3N unknowns each), with the
//!   exact flat band of longitudinal (gradient) modes at ω = 0.
//! * **Reconstruction maps** — the injections `ι^E`, `ι^H` that rebuild a
//!   full electromagnetic Bloch vector from its electric or magnetic trace,
//!   their inverses `pr^E`, `pr^H`, the unitary `U_EH = pr^E ∘ ι^H`
//!   intertwining the two wave problems, and the sign operator
//!   `sgn(M) = M (M²)^{-1/2}`.
//! * **Topology** — metric-weighted Fukui–Hatsugai–Suzuki Chern numbers of
//!   relevant band families, computed in the energy (`W`), electric (`ε`)
//!   and magnetic (`μ`) metrics, plus a finite-difference Berry-curvature
//!   cross-check. For media described by real weights all Chern numbers
//!   vanish; complex (e.g. gyrotropic) weights are required for nonzero ones.
//! * **Dynamics** — spectral time evolution `e^{-iωt}` of fiber states, the
//!   representative map `Q = P₊ + ½ P₀`, second-order residual checks, and
//!   reconstruction of the magnetic field trace from the electric one.
//!
//! Everything is deterministic: bases are lexicographically ordered, meshes
//! are traversed in a fixed order, and all tolerances live in [`tol`].
//!
//! The companion crate `maxbloch-cli` adds configuration files, CSV/JSON
//! output and a command-line driver; this crate is pure computation.

pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod linalg;
pub mod materials;
pub mod operators;
pub mod reconstruct;
pub mod spectrum;
pub mod tol;
pub mod topology;

pub use error::{CoreError, Result};
pub use lattice::{bz_mesh, dual_lattice, reciprocal_shell, KMesh, Lattice, PlaneWaveBasis};
pub use materials::{
    fourier_coefficients, inverse_weights, sample_weights, validate_weights, MaterialProfile,
    MaterialWeights, WeightBounds, WeightFourier,
};
pub use operators::{
    assemble_gram, assemble_rot, assemble_wave_operator, equivariance_shift, first_order_problem,
    AssemblyMode, FiberProblem, MetricTag, ProblemKind,
};
pub use reconstruct::{iota, pr_component, sgn_eigenvalue, u_eh, BlochVector, FieldComponent, ReconstructionContext};
pub use spectrum::{
    band_structure, chiral_check, classify_modes, detect_gap, solve_fiber, BandStructure,
    FiberSpectrum, GapReport, ModeLabel, RelevantBands,
};
pub use topology::{
    berry_curvature_fd, berry_curvature_fd_field, chern_fhs, chern_matrix, fhs_plaquette_field,
    relevant_frames, ChernEntries, ChernReport, ChernScalar, ChernSetup, FamilySet, FrameSet,
    ProjectorFrame, SubtorusSlices, MIN_SUBTORUS_DIVISIONS,
};
pub use dynamics::{
    propagate, q_representative, reconstruct_solution, second_order_residual, FiberDynamics,
    FieldState, ReconstructedTrace,
};
