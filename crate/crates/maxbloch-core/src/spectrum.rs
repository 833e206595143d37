//! Fiber eigensolutions, mode classification, band structures and
//! spectral-gap detection.
//!
//! Every fiber problem carries a flat family of zero modes: the kernel of
//! the blockwise curl `D(k)` consists of the *longitudinal* amplitudes
//! (`φ(G) ∥ k+G` slotwise), is exactly `N`-dimensional per 3N block for
//! `k + G ≠ 0`, and is independent of the material weights. Wave problems
//! therefore have `N` zero eigenvalues and `2N` positive ones, while the
//! first-order problem has `2N` zero modes and a spectrum symmetric under
//! `ω ↔ −ω` (chiral symmetry `J = diag(I, −I)`: `J Rot J = −Rot`,
//! `J S_W J = S_W`). [`classify_modes`] verifies both the zero-mode count
//! and the longitudinal nature of the computed kernel before any band
//! index is handed out; positive bands are numbered `1, 2, …` in ascending
//! frequency.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{CoreError, Result};
use crate::lattice::PlaneWaveBasis;
use crate::linalg::{c64, solve_hermitian_pencil, PencilEigen};
use crate::materials::WeightFourier;
use crate::operators::{
    assemble_wave_operator, AssemblyMode, FiberProblem, ProblemKind,
};
use crate::tol;

/// Physical classification of one eigenvalue of a fiber problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModeLabel {
    /// Member of the flat longitudinal family at ω = 0.
    Zero,
    /// `n`-th positive band (1-based, ascending frequency).
    Positive(usize),
    /// Chiral partner of the `n`-th positive band (first order only).
    Negative(usize),
}

/// A solved and classified fiber eigenproblem at one momentum.
#[derive(Debug, Clone)]
pub struct FiberSpectrum {
    /// Momentum the problem was assembled at.
    pub k: Vector3<f64>,
    /// Which pencil was solved.
    pub kind: ProblemKind,
    /// Number of plane waves `N` in the basis.
    pub n_basis: usize,
    /// Raw eigendecomposition (ascending, Gram-orthonormal columns).
    pub eigen: PencilEigen,
    /// Per-eigenvalue classification, aligned with `eigen.eigenvalues`.
    pub labels: Vec<ModeLabel>,
}

impl FiberSpectrum {
    /// Positive band frequencies `ω_1 ≤ ω_2 ≤ …` (for wave problems the
    /// square roots of the positive eigenvalues).
    pub fn positive_frequencies(&self) -> Vec<f64> {
        self.labels
            .iter()
            .zip(&self.eigen.eigenvalues)
            .filter(|(l, _)| matches!(l, ModeLabel::Positive(_)))
            .map(|(_, &v)| match self.kind {
                ProblemKind::FirstOrder => v,
                _ => v.max(0.0).sqrt(),
            })
            .collect()
    }

    /// Column index of the eigenvector with the given label, if present.
    pub fn index_of_label(&self, label: ModeLabel) -> Option<usize> {
        self.labels.iter().position(|l| *l == label)
    }

    /// Eigenvector columns of the positive bands `first..=last` (1-based).
    pub fn positive_band_columns(&self, bands: &RelevantBands) -> Result<crate::linalg::CMat> {
        let count = bands.count();
        let start = self
            .index_of_label(ModeLabel::Positive(bands.first))
            .ok_or_else(|| CoreError::InvalidBandFamily {
                detail: format!("band {} not present in spectrum", bands.first),
            })?;
        if start + count > self.eigen.len() {
            return Err(CoreError::InvalidBandFamily {
                detail: format!(
                    "bands {}..={} exceed the {} available eigenpairs",
                    bands.first,
                    bands.last,
                    self.eigen.len()
                ),
            });
        }
        Ok(self.eigen.vectors.columns(start, count).into_owned())
    }
}

/// A contiguous family of positive bands `first..=last` (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RelevantBands {
    pub first: usize,
    pub last: usize,
}

impl RelevantBands {
    /// Validated constructor: `1 ≤ first ≤ last`.
    pub fn new(first: usize, last: usize) -> Result<Self> {
        if first == 0 || last < first {
            return Err(CoreError::InvalidBandFamily {
                detail: format!("need 1 ≤ first ≤ last, got {first}..={last}"),
            });
        }
        Ok(Self { first, last })
    }

    /// Number of bands in the family.
    pub fn count(&self) -> usize {
        self.last - self.first + 1
    }

    /// Iterate over the 1-based band indices.
    pub fn indices(&self) -> impl Iterator<Item = usize> {
        self.first..=self.last
    }
}

/// Solve a fiber problem and classify its modes.
pub fn solve_fiber(basis: &PlaneWaveBasis, problem: &FiberProblem) -> Result<FiberSpectrum> {
    let eigen = solve_hermitian_pencil(&problem.stiffness, &problem.gram, "fiber problem")?;
    let labels = classify_modes(basis, problem, &eigen)?;
    Ok(FiberSpectrum {
        k: problem.k,
        kind: problem.kind,
        n_basis: basis.len(),
        eigen,
        labels,
    })
}

/// Classify the eigenvalues of a solved fiber problem.
///
/// Checks, in order: that no wave eigenvalue is significantly negative;
/// that the number of numerically-zero eigenvalues (relative threshold
/// [`tol::ZERO_TOL_REL`] × spectral radius) is exactly `N` for wave
/// problems and `2N` for the first-order problem; and that every zero mode
/// is longitudinal — slotwise parallel to `k + G` — with relative
/// transverse leakage at most [`tol::TRANSVERSALITY_TOL`].
pub fn classify_modes(
    basis: &PlaneWaveBasis,
    problem: &FiberProblem,
    eigen: &PencilEigen,
) -> Result<Vec<ModeLabel>> {
    let n = basis.len();
    let total = eigen.len();
    let expected_zero = match problem.kind {
        ProblemKind::FirstOrder => 2 * n,
        _ => n,
    };
    let scale = eigen
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let zero_tol = tol::ZERO_TOL_REL * scale.max(f64::MIN_POSITIVE);

    if !matches!(problem.kind, ProblemKind::FirstOrder) {
        if let Some(min) = eigen.eigenvalues.first() {
            if *min < -zero_tol {
                return Err(CoreError::UnphysicalState {
                    detail: format!(
                        "wave pencil produced a negative eigenvalue {min:.3e} \
                         (threshold {zero_tol:.3e})"
                    ),
                });
            }
        }
    }

    let zero_count = eigen
        .eigenvalues
        .iter()
        .filter(|v| v.abs() <= zero_tol)
        .count();
    if zero_count != expected_zero {
        return Err(CoreError::ZeroModeCount {
            found: zero_count,
            expected: expected_zero,
        });
    }

    // Longitudinal purity of the computed kernel: per G-slot, remove the
    // component along the unit vector k+G and measure what remains.
    let first_zero = eigen
        .eigenvalues
        .iter()
        .position(|v| v.abs() <= zero_tol)
        .unwrap_or(0);
    let blocks = eigen.vectors.nrows() / (3 * n);
    for col in first_zero..first_zero + expected_zero {
        let v = eigen.vectors.column(col);
        let mut transverse2 = 0.0f64;
        let mut total2 = 0.0f64;
        for b in 0..blocks {
            for g in 0..n {
                let kg = basis.k_plus_g(&problem.k, g);
                let norm = kg.norm();
                if norm == 0.0 {
                    // enlarged kernel slot; classification is undefined here
                    return Err(CoreError::InvalidMesh {
                        detail: "k + G = 0 on a fiber; move k off the dual lattice".to_string(),
                    });
                }
                let u = kg / norm;
                let slot = 3 * (b * n + g);
                let a = [v[slot], v[slot + 1], v[slot + 2]];
                let along = a[0] * c64(u[0], 0.0) + a[1] * c64(u[1], 0.0) + a[2] * c64(u[2], 0.0);
                total2 += a.iter().map(|z| z.norm_sqr()).sum::<f64>();
                // subtract the longitudinal part componentwise; this stays
                // accurate to machine precision (no norm² cancellation)
                for i in 0..3 {
                    transverse2 += (a[i] - along * c64(u[i], 0.0)).norm_sqr();
                }
            }
        }
        let leakage = (transverse2 / total2.max(f64::MIN_POSITIVE)).sqrt();
        if leakage > tol::TRANSVERSALITY_TOL {
            return Err(CoreError::NotTransversal {
                leakage,
                tol: tol::TRANSVERSALITY_TOL,
            });
        }
    }

    let mut labels = vec![ModeLabel::Zero; total];
    match problem.kind {
        ProblemKind::FirstOrder => {
            // total = 6N: 2N negative, 2N zero, 2N positive.
            for i in 0..2 * n {
                labels[i] = ModeLabel::Negative(2 * n - i);
                labels[4 * n + i] = ModeLabel::Positive(i + 1);
            }
        }
        _ => {
            // total = 3N: N zero, 2N positive.
            for i in 0..2 * n {
                labels[n + i] = ModeLabel::Positive(i + 1);
            }
        }
    }
    Ok(labels)
}

/// Verify chiral symmetry of a solved first-order spectrum.
///
/// Returns the worst of two relative defects: the pairing defect
/// `max |ω_i + ω_{rev(i)}| / ω_max` of the sorted spectrum, and the action
/// defect `max ‖Rot (JΨ) + ω S (JΨ)‖ / ‖Rot‖` over all positive
/// eigenvectors, where `J = diag(I, −I)` flips the magnetic block.
pub fn chiral_check(problem: &FiberProblem, spectrum: &FiberSpectrum) -> Result<f64> {
    if !matches!(spectrum.kind, ProblemKind::FirstOrder) {
        return Err(CoreError::InvalidBandFamily {
            detail: "chiral symmetry is a first-order property".to_string(),
        });
    }
    let total = spectrum.eigen.len();
    let scale = spectrum
        .eigen
        .eigenvalues
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut defect = 0.0f64;
    for i in 0..total {
        defect = defect.max(
            (spectrum.eigen.eigenvalues[i] + spectrum.eigen.eigenvalues[total - 1 - i]).abs()
                / scale,
        );
    }

    let half = spectrum.eigen.vectors.nrows() / 2;
    let a_norm = problem.stiffness.norm().max(f64::MIN_POSITIVE);
    for (i, label) in spectrum.labels.iter().enumerate() {
        if !matches!(label, ModeLabel::Positive(_)) {
            continue;
        }
        let mut jv = spectrum.eigen.vectors.column(i).into_owned();
        for r in half..2 * half {
            jv[r] = -jv[r];
        }
        let omega = spectrum.eigen.eigenvalues[i];
        let residual =
            (&problem.stiffness * &jv + &problem.gram * &jv * c64(omega, 0.0)).norm() / a_norm;
        defect = defect.max(residual);
    }
    Ok(defect)
}

/// Positive band frequencies over a list of momenta, plus the flat band.
#[derive(Debug, Clone)]
pub struct BandStructure {
    /// Momenta in input order.
    pub kpoints: Vec<Vector3<f64>>,
    /// Number of positive bands recorded per momentum.
    pub n_bands: usize,
    /// `omegas[ik][b]` = frequency of band `b+1` at `kpoints[ik]`.
    pub omegas: Vec<Vec<f64>>,
}

impl BandStructure {
    /// Largest value of band `b` (1-based) over all momenta.
    pub fn band_max(&self, band: usize) -> f64 {
        if band == 0 {
            return 0.0;
        }
        self.omegas
            .iter()
            .fold(f64::NEG_INFINITY, |m, row| m.max(row[band - 1]))
    }

    /// Smallest value of band `b` (1-based) over all momenta.
    pub fn band_min(&self, band: usize) -> f64 {
        if band == 0 {
            return 0.0;
        }
        self.omegas
            .iter()
            .fold(f64::INFINITY, |m, row| m.min(row[band - 1]))
    }
}

/// Solve the electric wave problem over a list of momenta (in parallel)
/// and collect the lowest `n_bands` positive frequencies at each.
///
/// `inverse_fourier` is required in `Independent` mode, ignored otherwise.
pub fn band_structure(
    basis: &PlaneWaveBasis,
    fourier: &WeightFourier,
    inverse_fourier: Option<&WeightFourier>,
    kpoints: &[Vector3<f64>],
    n_bands: usize,
    mode: AssemblyMode,
) -> Result<BandStructure> {
    if n_bands == 0 || n_bands > 2 * basis.len() {
        return Err(CoreError::InvalidBandFamily {
            detail: format!(
                "need 1 ≤ n_bands ≤ 2N = {}, got {n_bands}",
                2 * basis.len()
            ),
        });
    }
    let omegas: Result<Vec<Vec<f64>>> = kpoints
        .par_iter()
        .map(|k| {
            let problem = assemble_wave_operator(
                basis,
                fourier,
                inverse_fourier,
                k,
                ProblemKind::ElectricWave,
                mode,
            )?;
            let spectrum = solve_fiber(basis, &problem)?;
            Ok(spectrum.positive_frequencies()[..n_bands].to_vec())
        })
        .collect();
    Ok(BandStructure {
        kpoints: kpoints.to_vec(),
        n_bands,
        omegas: omegas?,
    })
}

/// One open interval of frequencies free of bands over the sampled momenta.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectralGap {
    /// Highest band below the gap (0 = the flat longitudinal band).
    pub below_band: usize,
    /// Top of the bands below: `max_k ω_{below}(k)`.
    pub lower: f64,
    /// Bottom of the bands above: `min_k ω_{below+1}(k)`.
    pub upper: f64,
    /// Gap width `upper − lower`.
    pub width: f64,
}

/// All spectral gaps found between consecutive recorded bands.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GapReport {
    /// Gaps in ascending frequency order (possibly empty).
    pub gaps: Vec<SpectralGap>,
}

impl GapReport {
    /// The relevant contiguous band family below the first gap that sits
    /// above at least one positive band, if any.
    pub fn relevant_below_first_positive_gap(&self) -> Option<RelevantBands> {
        self.gaps
            .iter()
            .find(|g| g.below_band >= 1)
            .map(|g| RelevantBands {
                first: 1,
                last: g.below_band,
            })
    }
}

/// Scan a band structure for spectral gaps wider than `min_width`,
/// including the gap above the flat band (below band 1) when present.
pub fn detect_gap(bands: &BandStructure, min_width: f64) -> GapReport {
    let mut gaps = Vec::new();
    for below in 0..bands.n_bands {
        let lower = bands.band_max(below);
        let upper = bands.band_min(below + 1);
        if upper - lower > min_width {
            gaps.push(SpectralGap {
                below_band: below,
                lower,
                upper,
                width: upper - lower,
            });
        }
    }
    GapReport { gaps }
}
