//! Periodic material weight fields: profiles, real-space sampling,
//! validation, pointwise inversion, and Fourier coefficients.
//!
//! A weight field assigns to every point of the unit cell a pair of 3×3
//! Hermitian positive-definite matrices `(ε(x), μ(x))` — the electric and
//! magnetic weights of the energy inner product. Everything downstream
//! consumes either the samples on a uniform grid or their discrete Fourier
//! coefficients `Ŵ(n) = (1/N) Σ_g W(x_g) e^{−2πi n·(g/N)}`, from which the
//! convolution (Toeplitz) Gram blocks `S[(G,i),(G′,j)] = Ŵ(G−G′)ᵢⱼ` are
//! assembled.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex;

use crate::error::{CoreError, Result};
use crate::lattice::Lattice;
use crate::linalg::{c64, C64};
use crate::tol;

/// Complex 3×3 weight sample.
pub type WeightMatrix = Matrix3<C64>;

/// Catalogue of built-in periodic weight profiles.
///
/// Complex matrix entries in configuration data are written as `[re, im]`
/// pairs in row-major order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)
)]
pub enum MaterialProfile {
    /// Uniform scalar weights `ε(x) = eps·I`, `μ(x) = mu·I`.
    HomogeneousIsotropic { eps: f64, mu: f64 },
    /// Uniform full-tensor weights; entries as `[re, im]` pairs, row-major.
    HomogeneousAnisotropic {
        eps: [[[f64; 2]; 3]; 3],
        mu: [[[f64; 2]; 3]; 3],
    },
    /// Scalar permittivity with a single cosine harmonic,
    /// `ε(x) = eps0 (1 + amplitude·cos(G₀·x))·I` with `G₀` the dual vector
    /// of integer triple `harmonic`; scalar constant `μ = mu`.
    SingleHarmonic {
        eps0: f64,
        amplitude: f64,
        harmonic: [i32; 3],
        #[cfg_attr(feature = "serde", serde(default = "default_unit"))]
        mu: f64,
    },
    /// Square array of gyrotropic rods along the third lattice axis,
    /// centered at the cell origin. Inside radius `radius` the permittivity
    /// is the Hermitian tensor
    /// `[[eps_plane, i·gyrotropy, 0], [−i·gyrotropy, eps_plane, 0], [0, 0, eps_axis]]`;
    /// outside it is `background·I`. The boundary is blended over a
    /// raised-cosine annulus of width `smoothing` (default: one sampling
    /// cell). `μ = I` everywhere.
    GyrotropicRodArray {
        background: f64,
        radius: f64,
        eps_plane: f64,
        gyrotropy: f64,
        eps_axis: f64,
        #[cfg_attr(feature = "serde", serde(default))]
        smoothing: Option<f64>,
    },
    /// Explicit user-supplied samples on a uniform grid.
    Tabulated(TabulatedWeights),
}

#[cfg(feature = "serde")]
fn default_unit() -> f64 {
    1.0
}

/// User-supplied weight samples on a uniform grid (row-major, last axis
/// fastest). Each sample is a row-major 3×3 matrix of `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(
    feature = "serde",
    derive(serde::Serialize, serde::Deserialize),
    serde(deny_unknown_fields)
)]
pub struct TabulatedWeights {
    pub grid: [usize; 3],
    pub eps: Vec<[[f64; 2]; 9]>,
    pub mu: Vec<[[f64; 2]; 9]>,
}

impl MaterialProfile {
    /// Check parameter ranges that do not depend on the sampling grid.
    pub fn validate(&self, lattice: &Lattice) -> Result<()> {
        match self {
            Self::HomogeneousIsotropic { eps, mu } => {
                for (name, v) in [("eps", eps), ("mu", mu)] {
                    if !(v.is_finite() && *v > 0.0) {
                        return Err(CoreError::InvalidProfile {
                            detail: format!("{name} must be positive and finite, got {v}"),
                        });
                    }
                }
                Ok(())
            }
            Self::HomogeneousAnisotropic { eps, mu } => {
                for (name, m) in [("eps", eps), ("mu", mu)] {
                    let w = matrix_from_pairs_3x3(m);
                    check_hermitian_pd(&w, name)?;
                }
                Ok(())
            }
            Self::SingleHarmonic {
                eps0,
                amplitude,
                harmonic,
                mu,
            } => {
                if !(eps0.is_finite() && *eps0 > 0.0) {
                    return Err(CoreError::InvalidProfile {
                        detail: format!("eps0 must be positive, got {eps0}"),
                    });
                }
                if !(amplitude.is_finite() && amplitude.abs() < 1.0) {
                    return Err(CoreError::InvalidProfile {
                        detail: format!(
                            "|amplitude| must be < 1 to keep the weight positive, got {amplitude}"
                        ),
                    });
                }
                if harmonic == &[0, 0, 0] {
                    return Err(CoreError::InvalidProfile {
                        detail: "harmonic index must be nonzero".to_string(),
                    });
                }
                if !(mu.is_finite() && *mu > 0.0) {
                    return Err(CoreError::InvalidProfile {
                        detail: format!("mu must be positive, got {mu}"),
                    });
                }
                Ok(())
            }
            Self::GyrotropicRodArray {
                background,
                radius,
                eps_plane,
                gyrotropy,
                eps_axis,
                smoothing,
            } => {
                if !(background.is_finite() && *background > 0.0) {
                    return Err(CoreError::InvalidProfile {
                        detail: format!("background must be positive, got {background}"),
                    });
                }
                if !(eps_axis.is_finite() && *eps_axis > 0.0) {
                    return Err(CoreError::InvalidProfile {
                        detail: format!("eps_axis must be positive, got {eps_axis}"),
                    });
                }
                // Positive definiteness of the in-plane block needs
                // eps_plane > |gyrotropy|.
                if !(eps_plane.is_finite() && gyrotropy.is_finite() && *eps_plane > gyrotropy.abs())
                {
                    return Err(CoreError::InvalidProfile {
                        detail: format!(
                            "require eps_plane > |gyrotropy| for a positive weight, \
                             got eps_plane = {eps_plane}, gyrotropy = {gyrotropy}"
                        ),
                    });
                }
                let half_pitch = 0.5 * lattice.vector(0).norm().min(lattice.vector(1).norm());
                let w = smoothing.unwrap_or(0.0);
                if !(radius.is_finite() && *radius > 0.0 && radius + 0.5 * w < half_pitch) {
                    return Err(CoreError::InvalidProfile {
                        detail: format!(
                            "rod radius {radius} (+ smoothing {w}) must fit inside half the \
                             pitch {half_pitch}"
                        ),
                    });
                }
                if let Some(w) = smoothing {
                    if !(w.is_finite() && *w >= 0.0)
                        || *w > tol::SMOOTHING_MAX_FRACTION * radius
                    {
                        return Err(CoreError::InvalidProfile {
                            detail: format!(
                                "smoothing width {w} must lie in [0, {} · radius]",
                                tol::SMOOTHING_MAX_FRACTION
                            ),
                        });
                    }
                }
                Ok(())
            }
            Self::Tabulated(tab) => {
                let n = tab.grid[0] * tab.grid[1] * tab.grid[2];
                if n == 0 {
                    return Err(CoreError::InvalidProfile {
                        detail: format!("tabulated grid must be nonempty, got {:?}", tab.grid),
                    });
                }
                if tab.eps.len() != n || tab.mu.len() != n {
                    return Err(CoreError::InvalidProfile {
                        detail: format!(
                            "tabulated sample counts (eps {}, mu {}) must equal grid size {n}",
                            tab.eps.len(),
                            tab.mu.len()
                        ),
                    });
                }
                Ok(())
            }
        }
    }
}

fn matrix_from_pairs_3x3(m: &[[[f64; 2]; 3]; 3]) -> WeightMatrix {
    WeightMatrix::from_fn(|i, j| c64(m[i][j][0], m[i][j][1]))
}

fn matrix_from_pairs_flat(m: &[[f64; 2]; 9]) -> WeightMatrix {
    WeightMatrix::from_fn(|i, j| c64(m[3 * i + j][0], m[3 * i + j][1]))
}

fn pairs_flat_from_matrix(m: &WeightMatrix) -> [[f64; 2]; 9] {
    let mut out = [[0.0; 2]; 9];
    for i in 0..3 {
        for j in 0..3 {
            out[3 * i + j] = [m[(i, j)].re, m[(i, j)].im];
        }
    }
    out
}

fn check_hermitian_pd(w: &WeightMatrix, name: &str) -> Result<()> {
    let herm = (w - w.adjoint()).norm() / w.norm().max(1.0);
    if herm > tol::HERMITICITY_TOL {
        return Err(CoreError::InvalidProfile {
            detail: format!("{name} tensor is not Hermitian (residual {herm:.3e})"),
        });
    }
    let sym = (w + w.adjoint()) * c64(0.5, 0.0);
    let eigs = sym.symmetric_eigen().eigenvalues;
    if eigs.iter().any(|l| !(*l > 0.0)) {
        return Err(CoreError::InvalidProfile {
            detail: format!("{name} tensor is not positive definite (eigenvalues {eigs:?})"),
        });
    }
    Ok(())
}

/// Weight samples on a uniform unit-cell grid (row-major, last axis
/// fastest: flat index `(g₁N₂ + g₂)N₃ + g₃`).
#[derive(Debug, Clone)]
pub struct MaterialWeights {
    grid: [usize; 3],
    eps: Vec<WeightMatrix>,
    mu: Vec<WeightMatrix>,
}

impl MaterialWeights {
    /// Wrap externally produced samples after a shape check.
    pub fn from_parts(
        grid: [usize; 3],
        eps: Vec<WeightMatrix>,
        mu: Vec<WeightMatrix>,
    ) -> Result<Self> {
        let n = grid[0] * grid[1] * grid[2];
        if n == 0 || eps.len() != n || mu.len() != n {
            return Err(CoreError::InvalidWeights {
                detail: format!(
                    "grid {grid:?} needs {n} samples, got eps {} and mu {}",
                    eps.len(),
                    mu.len()
                ),
            });
        }
        Ok(Self { grid, eps, mu })
    }

    /// Sampling grid dimensions.
    pub fn grid(&self) -> [usize; 3] {
        self.grid
    }

    /// Flat index of grid coordinate `g`.
    pub fn flat_index(&self, g: [usize; 3]) -> usize {
        (g[0] * self.grid[1] + g[1]) * self.grid[2] + g[2]
    }

    /// Electric weight at a grid coordinate.
    pub fn eps_at(&self, g: [usize; 3]) -> &WeightMatrix {
        &self.eps[self.flat_index(g)]
    }

    /// Magnetic weight at a grid coordinate.
    pub fn mu_at(&self, g: [usize; 3]) -> &WeightMatrix {
        &self.mu[self.flat_index(g)]
    }

    /// All electric samples in storage order.
    pub fn eps_samples(&self) -> &[WeightMatrix] {
        &self.eps
    }

    /// All magnetic samples in storage order.
    pub fn mu_samples(&self) -> &[WeightMatrix] {
        &self.mu
    }

    /// Convert to the explicit tabulated representation (`[re, im]`
    /// row-major pairs), e.g. for writing user-editable JSON.
    pub fn to_tabulated(&self) -> TabulatedWeights {
        TabulatedWeights {
            grid: self.grid,
            eps: self.eps.iter().map(pairs_flat_from_matrix).collect(),
            mu: self.mu.iter().map(pairs_flat_from_matrix).collect(),
        }
    }
}

/// Sample a profile on a uniform grid over the unit cell,
/// `x_g = Σᵢ (gᵢ/Nᵢ) aᵢ`.
pub fn sample_weights(
    profile: &MaterialProfile,
    lattice: &Lattice,
    grid: [usize; 3],
) -> Result<MaterialWeights> {
    profile.validate(lattice)?;
    if grid.iter().any(|&n| n == 0) {
        return Err(CoreError::InvalidWeights {
            detail: format!("sampling grid must be nonzero in every axis, got {grid:?}"),
        });
    }

    if let MaterialProfile::Tabulated(tab) = profile {
        if tab.grid != grid {
            return Err(CoreError::InvalidWeights {
                detail: format!(
                    "tabulated samples are on grid {:?}; requested {grid:?} \
                     (resampling is not supported)",
                    tab.grid
                ),
            });
        }
        let eps = tab.eps.iter().map(matrix_from_pairs_flat).collect();
        let mu = tab.mu.iter().map(matrix_from_pairs_flat).collect();
        return MaterialWeights::from_parts(grid, eps, mu);
    }

    let n_total = grid[0] * grid[1] * grid[2];
    let mut eps = Vec::with_capacity(n_total);
    let mut mu = Vec::with_capacity(n_total);
    let identity = WeightMatrix::identity();

    for g1 in 0..grid[0] {
        for g2 in 0..grid[1] {
            for g3 in 0..grid[2] {
                let f = [
                    g1 as f64 / grid[0] as f64,
                    g2 as f64 / grid[1] as f64,
                    g3 as f64 / grid[2] as f64,
                ];
                let (e, m) = match profile {
                    MaterialProfile::HomogeneousIsotropic { eps, mu } => {
                        (identity * c64(*eps, 0.0), identity * c64(*mu, 0.0))
                    }
                    MaterialProfile::HomogeneousAnisotropic { eps, mu } => {
                        (matrix_from_pairs_3x3(eps), matrix_from_pairs_3x3(mu))
                    }
                    MaterialProfile::SingleHarmonic {
                        eps0,
                        amplitude,
                        harmonic,
                        mu,
                    } => {
                        let phase = 2.0
                            * std::f64::consts::PI
                            * (harmonic[0] as f64 * f[0]
                                + harmonic[1] as f64 * f[1]
                                + harmonic[2] as f64 * f[2]);
                        let val = eps0 * (1.0 + amplitude * phase.cos());
                        (identity * c64(val, 0.0), identity * c64(*mu, 0.0))
                    }
                    MaterialProfile::GyrotropicRodArray {
                        background,
                        radius,
                        eps_plane,
                        gyrotropy,
                        eps_axis,
                        smoothing,
                    } => {
                        let width = smoothing.unwrap_or_else(|| {
                            (lattice.vector(0).norm() / grid[0] as f64)
                                .max(lattice.vector(1).norm() / grid[1] as f64)
                        });
                        let rod = gyro_tensor(*eps_plane, *gyrotropy, *eps_axis);
                        let bg = identity * c64(*background, 0.0);
                        // Periodic in-plane distance from the rod axis.
                        let w1 = f[0] - f[0].round();
                        let w2 = f[1] - f[1].round();
                        let x = lattice.vector(0) * w1 + lattice.vector(1) * w2;
                        let d = Vector3::new(x[0], x[1], 0.0).norm();
                        let blend = raised_cosine_blend(d, *radius, width);
                        (rod * c64(blend, 0.0) + bg * c64(1.0 - blend, 0.0), identity)
                    }
                    MaterialProfile::Tabulated(_) => unreachable!("handled above"),
                };
                eps.push(e);
                mu.push(m);
            }
        }
    }
    MaterialWeights::from_parts(grid, eps, mu)
}

fn gyro_tensor(eps_plane: f64, gyrotropy: f64, eps_axis: f64) -> WeightMatrix {
    let mut m = WeightMatrix::zeros();
    m[(0, 0)] = c64(eps_plane, 0.0);
    m[(1, 1)] = c64(eps_plane, 0.0);
    m[(2, 2)] = c64(eps_axis, 0.0);
    m[(0, 1)] = c64(0.0, gyrotropy);
    m[(1, 0)] = c64(0.0, -gyrotropy);
    m
}

/// Raised-cosine indicator of the disk of radius `r`: 1 inside
/// `r − w/2`, 0 outside `r + w/2`, cosine-interpolated in between.
fn raised_cosine_blend(d: f64, r: f64, w: f64) -> f64 {
    if w <= 0.0 {
        return if d <= r { 1.0 } else { 0.0 };
    }
    let lo = r - 0.5 * w;
    let hi = r + 0.5 * w;
    if d <= lo {
        1.0
    } else if d >= hi {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (d - lo) / w).cos())
    }
}

/// Uniform spectral bounds and structure flags of a sampled weight field.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeightBounds {
    /// Smallest eigenvalue over all samples and both weights (`c`).
    pub lower: f64,
    /// Largest eigenvalue over all samples and both weights (`C`).
    pub upper: f64,
    /// Worst relative Hermiticity residual over all samples.
    pub hermiticity: f64,
    /// True when every entry of every sample is real to machine precision
    /// (`max |Im| ≤ 1e-12`); real symmetric weights force all transported
    /// Chern numbers to vanish.
    pub all_real: bool,
}

/// Validate Hermiticity and uniform positivity of sampled weights, and
/// report the bounds `0 < c ≤ W(x) ≤ C` realized on the sample set.
pub fn validate_weights(weights: &MaterialWeights) -> Result<WeightBounds> {
    let mut lower = f64::INFINITY;
    let mut upper = f64::NEG_INFINITY;
    let mut worst_herm = 0.0f64;
    let mut max_imag = 0.0f64;

    for w in weights.eps_samples().iter().chain(weights.mu_samples()) {
        let herm = (w - w.adjoint()).norm() / w.norm().max(1.0);
        worst_herm = worst_herm.max(herm);
        if herm > tol::HERMITICITY_TOL {
            return Err(CoreError::InvalidWeights {
                detail: format!("sample is not Hermitian (residual {herm:.3e})"),
            });
        }
        let sym = (w + w.adjoint()) * c64(0.5, 0.0);
        for l in sym.symmetric_eigen().eigenvalues.iter() {
            lower = lower.min(*l);
            upper = upper.max(*l);
        }
        for entry in w.iter() {
            max_imag = max_imag.max(entry.im.abs());
        }
    }

    if !(lower > 0.0) {
        return Err(CoreError::InvalidWeights {
            detail: format!("weights are not uniformly positive (min eigenvalue {lower:.3e})"),
        });
    }
    Ok(WeightBounds {
        lower,
        upper,
        hermiticity: worst_herm,
        all_real: max_imag <= 1e-12,
    })
}

/// Pointwise inverse of both weights, re-Hermitized to absorb rounding.
pub fn inverse_weights(weights: &MaterialWeights) -> Result<MaterialWeights> {
    let invert = |w: &WeightMatrix| -> Result<WeightMatrix> {
        let inv = w.try_inverse().ok_or_else(|| CoreError::InvalidWeights {
            detail: "weight sample is numerically singular".to_string(),
        })?;
        Ok((inv + inv.adjoint()) * c64(0.5, 0.0))
    };
    let eps = weights
        .eps_samples()
        .iter()
        .map(invert)
        .collect::<Result<Vec<_>>>()?;
    let mu = weights
        .mu_samples()
        .iter()
        .map(invert)
        .collect::<Result<Vec<_>>>()?;
    MaterialWeights::from_parts(weights.grid(), eps, mu)
}

/// Discrete Fourier coefficients of a sampled weight field, indexable by
/// integer frequency triples within the resolvable (anti-aliasing) band.
#[derive(Debug, Clone)]
pub struct WeightFourier {
    grid: [usize; 3],
    eps_hat: Vec<WeightMatrix>,
    mu_hat: Vec<WeightMatrix>,
}

/// Compute `Ŵ(n) = (1/N) Σ_g W(x_g) e^{−2πi n·(g/N)}` for both weights by
/// separable axis-at-a-time transforms.
pub fn fourier_coefficients(weights: &MaterialWeights) -> Result<WeightFourier> {
    Ok(WeightFourier {
        grid: weights.grid(),
        eps_hat: dft3(weights.eps_samples(), weights.grid()),
        mu_hat: dft3(weights.mu_samples(), weights.grid()),
    })
}

fn dft3(samples: &[WeightMatrix], grid: [usize; 3]) -> Vec<WeightMatrix> {
    let mut data = samples.to_vec();
    // Transform one axis at a time; normalization 1/N applied at the end.
    for axis in 0..3 {
        data = dft_axis(&data, grid, axis);
    }
    let norm = 1.0 / (grid[0] * grid[1] * grid[2]) as f64;
    for m in &mut data {
        *m *= c64(norm, 0.0);
    }
    data
}

fn dft_axis(data: &[WeightMatrix], grid: [usize; 3], axis: usize) -> Vec<WeightMatrix> {
    let n = grid[axis];
    let mut out = vec![WeightMatrix::zeros(); data.len()];
    let flat = |g: [usize; 3]| (g[0] * grid[1] + g[1]) * grid[2] + g[2];
    // Precompute the twiddle factors e^{−2πi k g / n}.
    let mut twiddle = vec![Complex::default(); n * n];
    for k in 0..n {
        for g in 0..n {
            let phase = -2.0 * std::f64::consts::PI * (k * g % n) as f64 / n as f64;
            twiddle[k * n + g] = c64(phase.cos(), phase.sin());
        }
    }
    let (other_a, other_b) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    for ia in 0..grid[other_a] {
        for ib in 0..grid[other_b] {
            for k in 0..n {
                let mut acc = WeightMatrix::zeros();
                for g in 0..n {
                    let mut coord = [0usize; 3];
                    coord[axis] = g;
                    coord[other_a] = ia;
                    coord[other_b] = ib;
                    acc += data[flat(coord)] * twiddle[k * n + g];
                }
                let mut coord = [0usize; 3];
                coord[axis] = k;
                coord[other_a] = ia;
                coord[other_b] = ib;
                out[flat(coord)] = acc;
            }
        }
    }
    out
}

impl WeightFourier {
    /// Sampling grid the coefficients came from.
    pub fn grid(&self) -> [usize; 3] {
        self.grid
    }

    /// Largest frequency magnitude resolvable on each axis without
    /// aliasing ambiguity: `⌊(Nᵢ − 1)/2⌋`.
    pub fn resolvable(&self) -> [i32; 3] {
        [
            ((self.grid[0] - 1) / 2) as i32,
            ((self.grid[1] - 1) / 2) as i32,
            ((self.grid[2] - 1) / 2) as i32,
        ]
    }

    fn lookup<'a>(&self, table: &'a [WeightMatrix], n: &Vector3<i32>) -> Result<&'a WeightMatrix> {
        let res = self.resolvable();
        for axis in 0..3 {
            if n[axis].abs() > res[axis] {
                return Err(CoreError::ResolutionTooCoarse {
                    axis,
                    needed: (2 * n[axis].abs() + 1) as usize,
                    supported: self.grid[axis],
                });
            }
        }
        let wrap = |v: i32, len: usize| -> usize {
            let len = len as i32;
            (((v % len) + len) % len) as usize
        };
        let g = [
            wrap(n[0], self.grid[0]),
            wrap(n[1], self.grid[1]),
            wrap(n[2], self.grid[2]),
        ];
        Ok(&table[(g[0] * self.grid[1] + g[1]) * self.grid[2] + g[2]])
    }

    /// Electric coefficient `ε̂(n)`.
    pub fn eps_hat(&self, n: &Vector3<i32>) -> Result<&WeightMatrix> {
        self.lookup(&self.eps_hat, n)
    }

    /// Magnetic coefficient `μ̂(n)`.
    pub fn mu_hat(&self, n: &Vector3<i32>) -> Result<&WeightMatrix> {
        self.lookup(&self.mu_hat, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_lattice() -> Lattice {
        Lattice::cubic(1.0).unwrap()
    }

    #[test]
    fn homogeneous_profile_has_flat_samples_and_delta_spectrum() {
        let lat = unit_lattice();
        let profile = MaterialProfile::HomogeneousIsotropic { eps: 4.0, mu: 2.0 };
        let w = sample_weights(&profile, &lat, [8, 8, 8]).unwrap();
        let bounds = validate_weights(&w).unwrap();
        assert_relative_eq!(bounds.lower, 2.0, epsilon = 1e-13);
        assert_relative_eq!(bounds.upper, 4.0, epsilon = 1e-13);
        assert!(bounds.all_real);

        let f = fourier_coefficients(&w).unwrap();
        let zero = f.eps_hat(&Vector3::new(0, 0, 0)).unwrap();
        assert_relative_eq!((zero - WeightMatrix::identity() * c64(4.0, 0.0)).norm(), 0.0,
            epsilon = 1e-12);
        let off = f.eps_hat(&Vector3::new(1, -2, 0)).unwrap();
        assert!(off.norm() < 1e-13, "constant field has no higher harmonics");
        let mu0 = f.mu_hat(&Vector3::new(0, 0, 0)).unwrap();
        assert_relative_eq!((mu0 - WeightMatrix::identity() * c64(2.0, 0.0)).norm(), 0.0,
            epsilon = 1e-12);
    }

    #[test]
    fn single_harmonic_coefficients_are_exact() {
        // DFT of a pure cosine resolves exactly on any grid larger than
        // twice the harmonic: ε̂(±n₀) = eps0·amplitude/2, ε̂(0) = eps0.
        let lat = unit_lattice();
        let profile = MaterialProfile::SingleHarmonic {
            eps0: 3.0,
            amplitude: 0.4,
            harmonic: [1, 0, 0],
            mu: 1.0,
        };
        let w = sample_weights(&profile, &lat, [16, 4, 4]).unwrap();
        let f = fourier_coefficients(&w).unwrap();
        let id = WeightMatrix::identity();
        for n in [Vector3::new(1, 0, 0), Vector3::new(-1, 0, 0)] {
            let c = f.eps_hat(&n).unwrap();
            assert_relative_eq!((c - id * c64(0.6, 0.0)).norm(), 0.0, epsilon = 1e-12);
        }
        let c0 = f.eps_hat(&Vector3::new(0, 0, 0)).unwrap();
        assert_relative_eq!((c0 - id * c64(3.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
        let far = f.eps_hat(&Vector3::new(0, 1, 1)).unwrap();
        assert!(far.norm() < 1e-13);
    }

    #[test]
    fn out_of_band_frequency_is_rejected() {
        let lat = unit_lattice();
        let profile = MaterialProfile::HomogeneousIsotropic { eps: 1.0, mu: 1.0 };
        let w = sample_weights(&profile, &lat, [8, 8, 1]).unwrap();
        let f = fourier_coefficients(&w).unwrap();
        assert!(matches!(
            f.eps_hat(&Vector3::new(4, 0, 0)),
            Err(CoreError::ResolutionTooCoarse { axis: 0, .. })
        ));
        assert!(matches!(
            f.eps_hat(&Vector3::new(0, 0, 1)),
            Err(CoreError::ResolutionTooCoarse { axis: 2, .. })
        ));
        assert!(f.eps_hat(&Vector3::new(3, -3, 0)).is_ok());
    }

    #[test]
    fn gyrotropic_rod_coefficients_are_hermitian_and_volume_consistent() {
        let lat = Lattice::tetragonal(1.0, 0.2).unwrap();
        let profile = MaterialProfile::GyrotropicRodArray {
            background: 1.0,
            radius: 0.11,
            eps_plane: 14.0,
            gyrotropy: 12.4,
            eps_axis: 15.0,
            smoothing: Some(0.0),
        };
        let w = sample_weights(&profile, &lat, [128, 128, 1]).unwrap();
        let bounds = validate_weights(&w).unwrap();
        assert!(!bounds.all_real, "gyrotropy has imaginary off-diagonals");
        // in-plane eigenvalues are eps_plane ± gyrotropy = {1.6, 26.4}
        assert_relative_eq!(bounds.lower, 1.0, epsilon = 1e-12);
        assert_relative_eq!(bounds.upper, 26.4, epsilon = 1e-12);

        let f = fourier_coefficients(&w).unwrap();
        // Mean coefficient ≈ volume-fraction mixture.
        let frac = std::f64::consts::PI * 0.11f64.powi(2);
        let c0 = f.eps_hat(&Vector3::new(0, 0, 0)).unwrap();
        let expect = frac * 14.0 + (1.0 - frac) * 1.0;
        assert_relative_eq!(c0[(0, 0)].re, expect, max_relative = 0.02);
        assert_relative_eq!(c0[(2, 2)].re, frac * 15.0 + (1.0 - frac), max_relative = 0.02);
        // Even rod about the origin ⇒ Ŵ(−n) = Ŵ(n); Hermitian field ⇒
        // Ŵ(−n) = Ŵ(n)†; so every coefficient is itself Hermitian.
        for n in [Vector3::new(2, 1, 0), Vector3::new(0, 3, 0)] {
            let c = f.eps_hat(&n).unwrap();
            let cm = f.eps_hat(&(-n)).unwrap();
            assert!((c - cm).norm() < 1e-12);
            assert!((c - c.adjoint()).norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_weights_invert_pointwise() {
        let lat = Lattice::tetragonal(1.0, 0.2).unwrap();
        let profile = MaterialProfile::GyrotropicRodArray {
            background: 2.0,
            radius: 0.15,
            eps_plane: 10.0,
            gyrotropy: 5.0,
            eps_axis: 7.0,
            smoothing: None,
        };
        let w = sample_weights(&profile, &lat, [16, 16, 1]).unwrap();
        let inv = inverse_weights(&w).unwrap();
        for g1 in 0..16 {
            for g2 in 0..16 {
                let prod = w.eps_at([g1, g2, 0]) * inv.eps_at([g1, g2, 0]);
                assert!((prod - WeightMatrix::identity()).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        let lat = unit_lattice();
        assert!(sample_weights(
            &MaterialProfile::HomogeneousIsotropic { eps: -1.0, mu: 1.0 },
            &lat,
            [4, 4, 4]
        )
        .is_err());
        assert!(sample_weights(
            &MaterialProfile::SingleHarmonic {
                eps0: 1.0,
                amplitude: 1.5,
                harmonic: [1, 0, 0],
                mu: 1.0
            },
            &lat,
            [8, 8, 8]
        )
        .is_err());
        // gyrotropy dominating the diagonal breaks positivity
        assert!(sample_weights(
            &MaterialProfile::GyrotropicRodArray {
                background: 1.0,
                radius: 0.2,
                eps_plane: 2.0,
                gyrotropy: 3.0,
                eps_axis: 1.0,
                smoothing: None
            },
            &lat,
            [8, 8, 1]
        )
        .is_err());
        // rod overflowing the cell
        assert!(sample_weights(
            &MaterialProfile::GyrotropicRodArray {
                background: 1.0,
                radius: 0.6,
                eps_plane: 2.0,
                gyrotropy: 0.5,
                eps_axis: 1.0,
                smoothing: None
            },
            &lat,
            [8, 8, 1]
        )
        .is_err());
    }

    #[test]
    fn tabulated_roundtrip_preserves_samples() {
        let lat = Lattice::tetragonal(1.0, 0.2).unwrap();
        let profile = MaterialProfile::GyrotropicRodArray {
            background: 1.0,
            radius: 0.11,
            eps_plane: 14.0,
            gyrotropy: 12.4,
            eps_axis: 15.0,
            smoothing: None,
        };
        let w = sample_weights(&profile, &lat, [8, 8, 1]).unwrap();
        let tab = MaterialProfile::Tabulated(w.to_tabulated());
        let w2 = sample_weights(&tab, &lat, [8, 8, 1]).unwrap();
        for (a, b) in w.eps_samples().iter().zip(w2.eps_samples()) {
            assert!((a - b).norm() == 0.0);
        }
        // mismatched grid is refused
        assert!(sample_weights(&tab, &lat, [16, 16, 1]).is_err());
    }
}
