//! Assembly of the discretized fiber operators at a Bloch momentum `k`.
//!
//! In the truncated plane-wave basis the curl acts blockwise as the real
//! antisymmetric matrix `D(k) = blockdiag over G of [(k+G)×]` (so
//! `D† = −D`), and a weight field enters through its convolution (Gram)
//! matrix `S_W[(G,i),(G′,j)] = Ŵ(G−G′)ᵢⱼ`, a Hermitian block-Toeplitz
//! matrix. Assembled problems:
//!
//! * first order: `Rot(k) Ψ = ω S_W Ψ` with
//!   `Rot(k) = [[0, D], [−D, 0]]` acting on stacked `(electric, magnetic)`
//!   amplitudes and `S_W = diag(S_ε, S_μ)`;
//! * electric wave: `D† M_μ D φ = ω² S_ε φ`;
//! * magnetic wave: `D† M_ε D φ = ω² S_μ φ`.
//!
//! The inverse factor `M_μ` is either the matrix inverse `S_μ⁻¹`
//! (*consistent* mode — squaring the first-order problem exactly, so both
//! wave problems reproduce identical frequencies to machine precision) or
//! the Gram matrix of the pointwise-inverted field (*independent* mode —
//! the classic inverse-rule discretization, agreeing only up to
//! truncation error).
//!
//! Momentum-shift covariance: the assembled matrices obey
//! `A(k − γ*)[G, G′] = A(k)[G − γ*, G′ − γ*]` exactly on index pairs that
//! stay inside the truncation ball; [`equivariance_shift`] enumerates that
//! overlap and [`shift_frame`] re-expands eigenframes across a
//! zone-boundary wrap.

use nalgebra::Vector3;

use crate::error::{CoreError, Result};
use crate::lattice::PlaneWaveBasis;
use crate::linalg::{block_diag2, cross_matrix, hermitize, CMat};
use crate::materials::WeightFourier;

/// Which weight metric a Gram matrix represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum MetricTag {
    /// Electric weight `ε` on 3N amplitudes.
    Electric,
    /// Magnetic weight `μ` on 3N amplitudes.
    Magnetic,
    /// Block-diagonal energy metric `diag(S_ε, S_μ)` on 6N amplitudes.
    Energy,
}

/// How the inverse weight inside a wave operator is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(rename_all = "snake_case")
)]
pub enum AssemblyMode {
    /// Use the matrix inverse of the weight Gram matrix. The wave
    /// problems are then exact squares of the first-order problem.
    #[default]
    Consistent,
    /// Use the Gram matrix of the pointwise-inverted weight field
    /// (inverse rule). Discretizations agree only up to truncation error.
    Independent,
}

/// Which eigenvalue problem a [`FiberProblem`] encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    /// `Rot(k) Ψ = ω S_W Ψ` on 6N stacked amplitudes.
    FirstOrder,
    /// `D† M_μ D φ = ω² S_ε φ` on 3N electric amplitudes.
    ElectricWave,
    /// `D† M_ε D φ = ω² S_μ φ` on 3N magnetic amplitudes.
    MagneticWave,
}

/// An assembled Hermitian-definite pencil `(stiffness, gram)` at fixed `k`.
#[derive(Debug, Clone)]
pub struct FiberProblem {
    /// Which eigenvalue problem this is.
    pub kind: ProblemKind,
    /// Bloch momentum the operators were assembled at.
    pub k: Vector3<f64>,
    /// Left-hand (Hermitian) operator.
    pub stiffness: CMat,
    /// Right-hand Hermitian positive-definite Gram matrix.
    pub gram: CMat,
}

impl FiberProblem {
    /// Matrix dimension (6N for first order, 3N for wave problems).
    pub fn dim(&self) -> usize {
        self.stiffness.nrows()
    }
}

/// Blockwise curl matrix `D(k) = blockdiag((k+G)×)`, real antisymmetric.
pub fn curl_matrix(basis: &PlaneWaveBasis, k: &Vector3<f64>) -> CMat {
    let n = basis.len();
    let mut d = CMat::zeros(3 * n, 3 * n);
    for g in 0..n {
        let block = cross_matrix(&basis.k_plus_g(k, g));
        d.view_mut((3 * g, 3 * g), (3, 3)).copy_from(&block);
    }
    d
}

/// Hermitian block-Toeplitz Gram matrix of a weight metric.
///
/// `Energy` stacks the electric and magnetic Grams block-diagonally.
/// Fails when the sampling grid cannot resolve a required difference
/// frequency `G − G′` (anti-aliasing guard).
pub fn assemble_gram(
    basis: &PlaneWaveBasis,
    fourier: &WeightFourier,
    metric: MetricTag,
) -> Result<CMat> {
    match metric {
        MetricTag::Electric => toeplitz(basis, fourier, true),
        MetricTag::Magnetic => toeplitz(basis, fourier, false),
        MetricTag::Energy => {
            let se = toeplitz(basis, fourier, true)?;
            let sm = toeplitz(basis, fourier, false)?;
            Ok(block_diag2(&se, &sm))
        }
    }
}

fn toeplitz(basis: &PlaneWaveBasis, fourier: &WeightFourier, electric: bool) -> Result<CMat> {
    let n = basis.len();
    let mut s = CMat::zeros(3 * n, 3 * n);
    for i in 0..n {
        for j in 0..n {
            let delta = basis.index_triple(i) - basis.index_triple(j);
            let what = if electric {
                fourier.eps_hat(&delta)?
            } else {
                fourier.mu_hat(&delta)?
            };
            s.view_mut((3 * i, 3 * j), (3, 3)).copy_from(what);
        }
    }
    hermitize(&mut s);
    Ok(s)
}

/// First-order pencil `Rot(k) Ψ = ω S_W Ψ`:
/// `Rot(k) = [[0, D], [−D, 0]]`, `S_W = diag(S_ε, S_μ)`.
pub fn first_order_problem(
    basis: &PlaneWaveBasis,
    fourier: &WeightFourier,
    k: &Vector3<f64>,
) -> Result<FiberProblem> {
    Ok(FiberProblem {
        kind: ProblemKind::FirstOrder,
        k: *k,
        stiffness: assemble_rot(basis, k),
        gram: assemble_gram(basis, fourier, MetricTag::Energy)?,
    })
}

/// The Hermitian first-order operator `Rot(k) = [[0, D], [−D, 0]]` on
/// stacked `(electric, magnetic)` amplitudes.
pub fn assemble_rot(basis: &PlaneWaveBasis, k: &Vector3<f64>) -> CMat {
    let d = curl_matrix(basis, k);
    let m = d.nrows();
    let mut rot = CMat::zeros(2 * m, 2 * m);
    rot.view_mut((0, m), (m, m)).copy_from(&d);
    rot.view_mut((m, 0), (m, m)).copy_from(&(-&d));
    rot
}

/// Second-order wave pencil for the chosen field.
///
/// * `ProblemKind::ElectricWave`: `D† M_μ D φ = ω² S_ε φ`
/// * `ProblemKind::MagneticWave`: `D† M_ε D φ = ω² S_μ φ`
///
/// In `Consistent` mode the inverse factor is the matrix inverse of the
/// other field's Gram; `inverse_fourier` may be `None`. In `Independent`
/// mode it is the Gram of the pointwise-inverted field, so
/// `inverse_fourier` (coefficients of `W⁻¹(x)`) is required.
pub fn assemble_wave_operator(
    basis: &PlaneWaveBasis,
    fourier: &WeightFourier,
    inverse_fourier: Option<&WeightFourier>,
    k: &Vector3<f64>,
    kind: ProblemKind,
    mode: AssemblyMode,
) -> Result<FiberProblem> {
    let (own_metric, other_metric) = match kind {
        ProblemKind::ElectricWave => (MetricTag::Electric, MetricTag::Magnetic),
        ProblemKind::MagneticWave => (MetricTag::Magnetic, MetricTag::Electric),
        ProblemKind::FirstOrder => {
            return Err(CoreError::InvalidBandFamily {
                detail: "use the first-order assembly for the full pencil".to_string(),
            })
        }
    };
    let d = curl_matrix(basis, k);
    let gram = assemble_gram(basis, fourier, own_metric)?;

    let m_other_d = match mode {
        AssemblyMode::Consistent => {
            let s_other = assemble_gram(basis, fourier, other_metric)?;
            let chol = crate::linalg::checked_cholesky(
                &s_other,
                &format!("{other_metric:?} gram in consistent wave assembly"),
            )?;
            chol.solve(&d)
        }
        AssemblyMode::Independent => {
            let inv = inverse_fourier.ok_or_else(|| CoreError::InvalidWeights {
                detail: "independent mode needs Fourier data of the inverted field".to_string(),
            })?;
            let t = match other_metric {
                MetricTag::Magnetic => toeplitz(basis, inv, false)?,
                _ => toeplitz(basis, inv, true)?,
            };
            &t * &d
        }
    };
    let mut stiffness = d.adjoint() * m_other_d;
    hermitize(&mut stiffness);
    Ok(FiberProblem {
        kind,
        k: *k,
        stiffness,
        gram,
    })
}

/// Index pairs realizing the exact momentum-shift covariance
/// `A(k − γ*)[G, G′] = A(k)[G − γ, G′ − γ]`.
///
/// Returns all `(i, j)` with `indices[i] − γ = indices[j]`; both matrix
/// entries referenced through such pairs agree exactly (up to floating
/// re-association in `k + G`). The overlap shrinks with `‖γ‖`, never
/// vanishing for shifts within twice the cutoff.
pub fn equivariance_shift(basis: &PlaneWaveBasis, gamma: &Vector3<i32>) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (i, n) in basis.indices().iter().enumerate() {
        if let Some(j) = basis.index_of(&(n - gamma)) {
            pairs.push((i, j));
        }
    }
    pairs
}

/// Re-expand a frame across a dual-lattice shift: the output row at index
/// triple `n` is the input row at `n + γ`; rows whose source lies outside
/// the truncation ball are zero.
///
/// Works on per-`G` component blocks of size 3 (wave frames, 3N rows) or
/// stacked electric/magnetic frames (6N rows).
pub fn shift_frame(basis: &PlaneWaveBasis, frame: &CMat, gamma: &Vector3<i32>) -> CMat {
    let n = basis.len();
    let rows = frame.nrows();
    let blocks = rows / (3 * n);
    debug_assert_eq!(rows, 3 * n * blocks, "frame rows must be a multiple of 3N");
    let mut out = CMat::zeros(rows, frame.ncols());
    for (i, idx) in basis.indices().iter().enumerate() {
        if let Some(j) = basis.index_of(&(idx + gamma)) {
            for b in 0..blocks {
                let dst = 3 * (b * n + i);
                let src = 3 * (b * n + j);
                out.view_mut((dst, 0), (3, frame.ncols()))
                    .copy_from(&frame.view((src, 0), (3, frame.ncols())));
            }
        }
    }
    out
}
