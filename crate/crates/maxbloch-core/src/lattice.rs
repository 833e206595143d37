//! Bravais lattices, dual (reciprocal) lattices, truncated plane-wave
//! index sets, and Brillouin-zone meshes.
//!
//! A lattice is stored as the 3×3 matrix whose columns are the primitive
//! vectors `a₁, a₂, a₃`. The dual basis `e₁*, e₂*, e₃*` satisfies
//! `aᵢ · eⱼ* = 2π δᵢⱼ`. Plane-wave sets collect all integer combinations
//! `G = n₁e₁* + n₂e₂* + n₃e₃*` with `‖G‖` below a cutoff; they are stored
//! in lexicographic index order, are closed under negation, and always
//! contain `G = 0`.

use nalgebra::{Matrix3, Vector3};

use crate::error::{CoreError, Result};
use crate::tol;

/// A three-dimensional Bravais lattice (columns = primitive vectors).
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    basis: Matrix3<f64>,
}

impl Lattice {
    /// Build a lattice from its three primitive vectors.
    ///
    /// Fails when the cell volume `|det[a₁ a₂ a₃]|` is below
    /// [`tol::LATTICE_DET_MIN`].
    pub fn new(a1: Vector3<f64>, a2: Vector3<f64>, a3: Vector3<f64>) -> Result<Self> {
        let basis = Matrix3::from_columns(&[a1, a2, a3]);
        let det = basis.determinant();
        if !det.is_finite() || det.abs() < tol::LATTICE_DET_MIN {
            return Err(CoreError::SingularLattice { det });
        }
        Ok(Self { basis })
    }

    /// Simple cubic lattice with edge `a`.
    pub fn cubic(a: f64) -> Result<Self> {
        Self::new(
            Vector3::new(a, 0.0, 0.0),
            Vector3::new(0.0, a, 0.0),
            Vector3::new(0.0, 0.0, a),
        )
    }

    /// Tetragonal lattice: square of edge `a` in the 1–2 plane, edge `c`
    /// along the third axis. With `c ≪ a` the third dual vector leaves any
    /// fixed cutoff ball, which restricts a plane-wave set to in-plane
    /// indices — the standard way to run effectively two-dimensional
    /// problems in this crate.
    pub fn tetragonal(a: f64, c: f64) -> Result<Self> {
        Self::new(
            Vector3::new(a, 0.0, 0.0),
            Vector3::new(0.0, a, 0.0),
            Vector3::new(0.0, 0.0, c),
        )
    }

    /// Primitive vectors as matrix columns.
    pub fn basis(&self) -> &Matrix3<f64> {
        &self.basis
    }

    /// `i`-th primitive vector (0-based).
    pub fn vector(&self, i: usize) -> Vector3<f64> {
        self.basis.column(i).into_owned()
    }

    /// Unit-cell volume `|det[a₁ a₂ a₃]|`.
    pub fn volume(&self) -> f64 {
        self.basis.determinant().abs()
    }
}

/// Dual-lattice basis: columns `eᵢ*` with `aᵢ · eⱼ* = 2π δᵢⱼ`,
/// i.e. `B* = 2π B⁻ᵀ`.
pub fn dual_lattice(lattice: &Lattice) -> Matrix3<f64> {
    lattice
        .basis()
        .try_inverse()
        .expect("lattice constructor guarantees invertibility")
        .transpose()
        * (2.0 * std::f64::consts::PI)
}

/// All dual-lattice integer index triples `n` with
/// `‖n₁e₁* + n₂e₂* + n₃e₃*‖ ≤ cutoff · (1 + boundary guard)`,
/// sorted lexicographically by `(n₁, n₂, n₃)`.
///
/// The relative boundary guard [`tol::SHELL_BOUNDARY_TOL`] makes shells
/// whose radius lands exactly on a lattice-vector length include that
/// shell regardless of rounding.
pub fn reciprocal_shell(dual: &Matrix3<f64>, cutoff: f64) -> Result<Vec<Vector3<i32>>> {
    if !(cutoff.is_finite() && cutoff >= 0.0) {
        return Err(CoreError::InvalidMesh {
            detail: format!("cutoff must be a finite non-negative number, got {cutoff}"),
        });
    }
    let limit = cutoff * (1.0 + tol::SHELL_BOUNDARY_TOL);
    // Biorthogonality gives nᵢ = aᵢ·G / 2π, hence |nᵢ| ≤ ‖aᵢ‖ ‖G‖ / 2π.
    let direct = dual
        .try_inverse()
        .ok_or(CoreError::SingularLattice { det: 0.0 })?
        .transpose()
        * (2.0 * std::f64::consts::PI);
    let mut bound = [0i64; 3];
    for i in 0..3 {
        let ai = direct.column(i).norm();
        bound[i] = ((limit * ai) / (2.0 * std::f64::consts::PI)).floor() as i64 + 1;
    }
    let mut out = Vec::new();
    for n1 in -bound[0]..=bound[0] {
        for n2 in -bound[1]..=bound[1] {
            for n3 in -bound[2]..=bound[2] {
                let g = dual * Vector3::new(n1 as f64, n2 as f64, n3 as f64);
                if g.norm() <= limit {
                    if out.len() >= tol::MAX_BASIS_DEFAULT {
                        return Err(CoreError::BasisTooLarge {
                            count: out.len() + 1,
                            max: tol::MAX_BASIS_DEFAULT,
                        });
                    }
                    out.push(Vector3::new(n1 as i32, n2 as i32, n3 as i32));
                }
            }
        }
    }
    out.sort_by_key(|n| (n[0], n[1], n[2]));
    Ok(out)
}

/// A truncated plane-wave index set over a fixed lattice.
#[derive(Debug, Clone)]
pub struct PlaneWaveBasis {
    dual: Matrix3<f64>,
    cutoff: f64,
    indices: Vec<Vector3<i32>>,
    max_component: [i32; 3],
}

impl PlaneWaveBasis {
    /// Collect all dual vectors within `cutoff` of the origin.
    pub fn new(lattice: &Lattice, cutoff: f64) -> Result<Self> {
        let dual = dual_lattice(lattice);
        let indices = reciprocal_shell(&dual, cutoff)?;
        let mut max_component = [0i32; 3];
        for n in &indices {
            for i in 0..3 {
                max_component[i] = max_component[i].max(n[i].abs());
            }
        }
        Ok(Self {
            dual,
            cutoff,
            indices,
            max_component,
        })
    }

    /// Number of plane waves.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// True when the set is empty (never for a valid cutoff ≥ 0).
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Norm cutoff used to build the set.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    /// Dual-lattice basis matrix (columns `eᵢ*`).
    pub fn dual(&self) -> &Matrix3<f64> {
        &self.dual
    }

    /// Integer index triples in lexicographic order.
    pub fn indices(&self) -> &[Vector3<i32>] {
        &self.indices
    }

    /// Largest `|nᵢ|` appearing on each axis; drives the sampling-grid
    /// resolution needed to form Toeplitz blocks without aliasing.
    pub fn max_component(&self) -> [i32; 3] {
        self.max_component
    }

    /// Integer triple of the `idx`-th plane wave.
    pub fn index_triple(&self, idx: usize) -> Vector3<i32> {
        self.indices[idx]
    }

    /// Cartesian dual vector `G` of the `idx`-th plane wave.
    pub fn g_vector(&self, idx: usize) -> Vector3<f64> {
        &self.dual * Vector3::new(
            self.indices[idx][0] as f64,
            self.indices[idx][1] as f64,
            self.indices[idx][2] as f64,
        )
    }

    /// `k + G` for the `idx`-th plane wave.
    pub fn k_plus_g(&self, k: &Vector3<f64>, idx: usize) -> Vector3<f64> {
        k + self.g_vector(idx)
    }

    /// Position of an integer triple in the lexicographic order, if present.
    pub fn index_of(&self, n: &Vector3<i32>) -> Option<usize> {
        self.indices
            .binary_search_by_key(&(n[0], n[1], n[2]), |m| (m[0], m[1], m[2]))
            .ok()
    }
}

/// A uniform, possibly shifted Brillouin-zone mesh in fractional dual
/// coordinates: `k(m) = Σᵢ (mᵢ + sᵢ)/Nᵢ · eᵢ*` with `mᵢ ∈ {0,…,Nᵢ−1}`.
///
/// Points are stored row-major with the **last axis fastest**.
#[derive(Debug, Clone)]
pub struct KMesh {
    divisions: [usize; 3],
    shift: [f64; 3],
    dual: Matrix3<f64>,
}

/// Build a shifted uniform mesh over the Brillouin zone.
///
/// The all-zero shift is rejected: it puts `k = 0` on the mesh, where the
/// slot `k + G = 0` enlarges the curl kernel and breaks the uniform
/// zero-mode count every downstream consumer relies on. Any nonzero shift
/// component keeps every `k + G` away from the origin.
///
/// Negative shift components are allowed: `k = ((i + s) / n) B` is used
/// unreduced, so a shift of `-0.5` with two divisions samples `±B/4` — a
/// pair of points that a fixed `G`-sphere truncates symmetrically, unlike
/// their `[0, 1)` representatives.
pub fn bz_mesh(lattice: &Lattice, divisions: [usize; 3], shift: [f64; 3]) -> Result<KMesh> {
    if divisions.iter().any(|&n| n == 0) {
        return Err(CoreError::InvalidMesh {
            detail: format!("every mesh division must be ≥ 1, got {divisions:?}"),
        });
    }
    for (i, s) in shift.iter().enumerate() {
        if !s.is_finite() || s.abs() >= 1.0 {
            return Err(CoreError::InvalidMesh {
                detail: format!("shift component {i} must lie in (-1, 1), got {s}"),
            });
        }
    }
    if shift.iter().all(|&s| s == 0.0) {
        return Err(CoreError::InvalidMesh {
            detail: "all-zero shift places k = 0 on the mesh where the curl kernel \
                     degenerates; use a half shift such as [0.5, 0.5, 0.5]"
                .to_string(),
        });
    }
    Ok(KMesh {
        divisions,
        shift,
        dual: dual_lattice(lattice),
    })
}

impl KMesh {
    /// Mesh divisions per axis.
    pub fn divisions(&self) -> [usize; 3] {
        self.divisions
    }

    /// Fractional shift per axis.
    pub fn shift(&self) -> [f64; 3] {
        self.shift
    }

    /// Dual basis matrix the mesh lives in.
    pub fn dual(&self) -> &Matrix3<f64> {
        &self.dual
    }

    /// Total number of mesh points.
    pub fn len(&self) -> usize {
        self.divisions[0] * self.divisions[1] * self.divisions[2]
    }

    /// True when the mesh has no points (never after validation).
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of the grid coordinate `(m₁, m₂, m₃)`, last axis fastest.
    pub fn flat_index(&self, m: [usize; 3]) -> usize {
        (m[0] * self.divisions[1] + m[1]) * self.divisions[2] + m[2]
    }

    /// Grid coordinate of a flat index.
    pub fn grid_coords(&self, idx: usize) -> [usize; 3] {
        let m3 = idx % self.divisions[2];
        let rest = idx / self.divisions[2];
        let m2 = rest % self.divisions[1];
        let m1 = rest / self.divisions[1];
        [m1, m2, m3]
    }

    /// Fractional coordinates `(mᵢ + sᵢ)/Nᵢ` of a mesh point.
    pub fn fractional(&self, m: [usize; 3]) -> [f64; 3] {
        [
            (m[0] as f64 + self.shift[0]) / self.divisions[0] as f64,
            (m[1] as f64 + self.shift[1]) / self.divisions[1] as f64,
            (m[2] as f64 + self.shift[2]) / self.divisions[2] as f64,
        ]
    }

    /// Cartesian mesh point for grid coordinate `m`.
    pub fn point(&self, m: [usize; 3]) -> Vector3<f64> {
        let f = self.fractional(m);
        &self.dual * Vector3::new(f[0], f[1], f[2])
    }

    /// Cartesian point for a signed grid coordinate, permitting ghost
    /// indices outside `0..Nᵢ` (finite-difference patches reach beyond the
    /// fundamental domain instead of wrapping).
    pub fn point_signed(&self, m: [i64; 3]) -> Vector3<f64> {
        let f = Vector3::new(
            (m[0] as f64 + self.shift[0]) / self.divisions[0] as f64,
            (m[1] as f64 + self.shift[1]) / self.divisions[1] as f64,
            (m[2] as f64 + self.shift[2]) / self.divisions[2] as f64,
        );
        &self.dual * f
    }

    /// All mesh points in storage order (last axis fastest).
    pub fn points(&self) -> Vec<Vector3<f64>> {
        let mut out = Vec::with_capacity(self.len());
        for m1 in 0..self.divisions[0] {
            for m2 in 0..self.divisions[1] {
                for m3 in 0..self.divisions[2] {
                    out.push(self.point([m1, m2, m3]));
                }
            }
        }
        out
    }

    /// Neighbor of `m` one step along `axis`, with periodic wrap.
    /// Returns the neighbor coordinate and whether the step wrapped around
    /// the zone boundary (i.e. the neighbor's `k` differs by a dual vector).
    pub fn neighbor(&self, m: [usize; 3], axis: usize) -> ([usize; 3], bool) {
        let mut out = m;
        let n = self.divisions[axis];
        out[axis] = (m[axis] + 1) % n;
        (out, m[axis] + 1 == n)
    }
}
