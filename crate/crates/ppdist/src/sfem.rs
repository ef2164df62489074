//! Piecewise-linear surface finite elements: scalar and face-vector
//! fields, stiffness/load assembly, and the Dirichlet-constrained SPD
//! solve reused by every outer iteration.

use std::collections::BTreeSet;
use std::ops::{Index, IndexMut};
use std::sync::OnceLock;

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use thiserror::Error;

use crate::mesh::{TriangleMesh, Vec3, DEGENERATE_AREA_FRACTION};

/// Relative residual guaranteed by [`solve_spd`].
pub const SOLVE_RTOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum SfemError {
    #[error("near-degenerate face {face} (area {area:.3e}) cannot be assembled")]
    DegenerateFace { face: usize, area: f64 },
    #[error("Cholesky factorization broke down: {0}")]
    Breakdown(String),
    #[error("solve residual {achieved:.3e} exceeds {required:.3e} after refinement")]
    ResidualTooLarge { achieved: f64, required: f64 },
}

/// One scalar value per mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField(Vec<f64>);

impl NodalField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn dot(&self, other: &NodalField) -> f64 {
        assert_eq!(self.len(), other.len());
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Index<usize> for NodalField {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for NodalField {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl From<Vec<f64>> for NodalField {
    fn from(values: Vec<f64>) -> Self {
        Self(values)
    }
}

/// One tangent 3-vector per mesh face (piecewise constant).
#[derive(Debug, Clone, PartialEq)]
pub struct FaceVectorField(Vec<Vec3>);

impl FaceVectorField {
    pub fn zeros(n_faces: usize) -> Self {
        Self(vec![Vec3::zeros(); n_faces])
    }

    pub fn from_vec(vectors: Vec<Vec3>) -> Self {
        Self(vectors)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Vec3] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [Vec3] {
        &mut self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Vec3> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .all(|v| v.x.is_finite() && v.y.is_finite() && v.z.is_finite())
    }

    /// Area-weighted L2 norm: `sqrt(sum_T area_T |v_T|^2)`.
    pub fn area_norm(&self, mesh: &TriangleMesh) -> f64 {
        assert_eq!(self.len(), mesh.n_faces());
        self.0
            .iter()
            .zip(mesh.face_areas())
            .map(|(v, a)| a * v.norm_squared())
            .sum::<f64>()
            .sqrt()
    }
}

impl Index<usize> for FaceVectorField {
    type Output = Vec3;
    fn index(&self, f: usize) -> &Vec3 {
        &self.0[f]
    }
}

impl IndexMut<usize> for FaceVectorField {
    fn index_mut(&mut self, f: usize) -> &mut Vec3 {
        &mut self.0[f]
    }
}

/// Gradients of the three P1 basis functions on a face. Constant per face
/// and tangent to it; zero for a collapsed face.
pub fn p1_gradients(mesh: &TriangleMesh, f: usize) -> [Vec3; 3] {
    let [a, b, c] = mesh.face_positions(f);
    let area = mesh.face_area(f);
    if area <= 0.0 {
        return [Vec3::zeros(); 3];
    }
    let normal = mesh.face_normal(f);
    let scale = 1.0 / (2.0 * area);
    // edge opposite each vertex, following the face orientation
    [
        normal.cross(&(c - b)) * scale,
        normal.cross(&(a - c)) * scale,
        normal.cross(&(b - a)) * scale,
    ]
}

/// A sparse symmetric system with an optional Dirichlet constraint set and
/// a lazily computed, cached Cholesky factorization.
///
/// Stored in compressed-sparse-row form; symmetry makes the same arrays
/// valid column-compressed input for the factorization.
pub struct SpdSystem {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    dirichlet: Option<Vec<bool>>,
    factor: OnceLock<Result<faer::sparse::linalg::solvers::Llt<usize, f64>, String>>,
}

impl std::fmt::Debug for SpdSystem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpdSystem")
            .field("n", &self.n)
            .field("nnz", &self.values.len())
            .field("constrained", &self.dirichlet.is_some())
            .field("factored", &(self.factor.get().is_some()))
            .finish()
    }
}

impl Clone for SpdSystem {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            row_ptr: self.row_ptr.clone(),
            col_idx: self.col_idx.clone(),
            values: self.values.clone(),
            dirichlet: self.dirichlet.clone(),
            factor: OnceLock::new(),
        }
    }
}

impl SpdSystem {
    /// Builds from unordered (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_unstable_by_key(|&(i, j, _)| (i, j));
        let mut col_idx: Vec<usize> = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut row_of: Vec<usize> = Vec::with_capacity(triplets.len());
        for (i, j, v) in triplets {
            debug_assert!(i < n && j < n);
            if let (Some(&last_row), Some(&last_col)) = (row_of.last(), col_idx.last()) {
                if last_row == i && last_col == j {
                    *values.last_mut().unwrap() += v;
                    continue;
                }
            }
            row_of.push(i);
            col_idx.push(j);
            values.push(v);
        }
        let mut row_ptr = vec![0usize; n + 1];
        for &i in &row_of {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self {
            n,
            row_ptr,
            col_idx,
            values,
            dirichlet: None,
            factor: OnceLock::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_constrained(&self) -> bool {
        self.dirichlet.is_some()
    }

    /// Matrix entry iteration: `(row, col, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).map(move |k| (i, self.col_idx[k], self.values[k]))
        })
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &NodalField) -> NodalField {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
        NodalField::from_vec(y)
    }

    /// Symmetric row/column elimination of the Dirichlet set: constrained
    /// rows and columns are replaced by the identity.
    pub fn constrained(&self, gamma1: &BTreeSet<usize>) -> SpdSystem {
        assert!(!gamma1.is_empty(), "Dirichlet set must be nonempty");
        let mut flags = vec![false; self.n];
        for &v in gamma1 {
            assert!(v < self.n, "Dirichlet vertex out of range");
            flags[v] = true;
        }
        let mut triplets = Vec::with_capacity(self.nnz());
        for (i, j, v) in self.entries() {
            if !flags[i] && !flags[j] {
                triplets.push((i, j, v));
            }
        }
        for &v in gamma1 {
            triplets.push((v, v, 1.0));
        }
        let mut system = SpdSystem::from_triplets(self.n, triplets);
        system.dirichlet = Some(flags);
        system
    }

    /// Zeroes the Dirichlet entries of a right-hand side, matching the
    /// homogeneous constraint.
    pub fn apply_dirichlet_rhs(&self, rhs: &mut NodalField) {
        if let Some(flags) = &self.dirichlet {
            for (i, &is_dirichlet) in flags.iter().enumerate() {
                if is_dirichlet {
                    rhs[i] = 0.0;
                }
            }
        }
    }

    fn factorization(
        &self,
    ) -> Result<&faer::sparse::linalg::solvers::Llt<usize, f64>, SfemError> {
        let result = self.factor.get_or_init(|| {
            let triplets: Vec<Triplet<usize, usize, f64>> = self
                .entries()
                .map(|(i, j, v)| Triplet::new(i, j, v))
                .collect();
            let mat = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &triplets)
                .map_err(|e| format!("building sparse matrix failed: {e:?}"))?;
            mat.sp_cholesky(faer::Side::Lower)
                .map_err(|e| format!("{e:?}"))
        });
        result
            .as_ref()
            .map_err(|e| SfemError::Breakdown(e.clone()))
    }

    /// Forces the factorization now (it is otherwise computed on first
    /// solve and cached).
    pub fn factorize(&self) -> Result<(), SfemError> {
        self.factorization().map(|_| ())
    }
}

/// Stiffness matrix of the surface Laplacian on P1 elements,
/// `K[i][j] = sum_T area_T grad(phi_i) . grad(phi_j)`. Unconstrained:
/// row sums are zero; constant fields are in the kernel.
pub fn assemble_stiffness(mesh: &TriangleMesh) -> Result<SpdSystem, SfemError> {
    let h = mesh.stats().h;
    let threshold = DEGENERATE_AREA_FRACTION * h * h;
    let mut triplets = Vec::with_capacity(9 * mesh.n_faces());
    for f in 0..mesh.n_faces() {
        let area = mesh.face_area(f);
        if area <= threshold {
            return Err(SfemError::DegenerateFace { face: f, area });
        }
        let grads = p1_gradients(mesh, f);
        let face = mesh.face(f);
        for a in 0..3 {
            for b in 0..3 {
                triplets.push((face[a], face[b], area * grads[a].dot(&grads[b])));
            }
        }
    }
    Ok(SpdSystem::from_triplets(mesh.n_vertices(), triplets))
}

/// Load vector `b[i] = integral of phi_i = sum of adjacent face areas / 3`.
pub fn assemble_load(mesh: &TriangleMesh) -> NodalField {
    let mut b = vec![0.0; mesh.n_vertices()];
    for f in 0..mesh.n_faces() {
        let third = mesh.face_area(f) / 3.0;
        for &v in &mesh.face(f) {
            b[v] += third;
        }
    }
    NodalField::from_vec(b)
}

/// Exact gradient of the piecewise-linear interpolant, one tangent vector
/// per face.
pub fn face_gradient(mesh: &TriangleMesh, u: &NodalField) -> FaceVectorField {
    assert_eq!(u.len(), mesh.n_vertices());
    let mut grads = Vec::with_capacity(mesh.n_faces());
    for f in 0..mesh.n_faces() {
        let basis = p1_gradients(mesh, f);
        let face = mesh.face(f);
        grads.push(basis[0] * u[face[0]] + basis[1] * u[face[1]] + basis[2] * u[face[2]]);
    }
    FaceVectorField::from_vec(grads)
}

/// Weak divergence data: `r[i] = sum_T area_T (w_T . grad phi_i)`. No
/// boundary term; the natural Neumann condition is exactly its omission.
pub fn assemble_div_rhs(mesh: &TriangleMesh, w: &FaceVectorField) -> NodalField {
    assert_eq!(w.len(), mesh.n_faces());
    let mut r = vec![0.0; mesh.n_vertices()];
    for f in 0..mesh.n_faces() {
        let basis = p1_gradients(mesh, f);
        let area = mesh.face_area(f);
        let face = mesh.face(f);
        for k in 0..3 {
            r[face[k]] += area * w[f].dot(&basis[k]);
        }
    }
    NodalField::from_vec(r)
}

/// Applies the homogeneous Dirichlet constraint to a system and right-hand
/// side. The matrix part is reusable across solves with new right-hand
/// sides; see [`SpdSystem::apply_dirichlet_rhs`].
pub fn constrain_dirichlet(
    system: &SpdSystem,
    rhs: &NodalField,
    gamma1: &BTreeSet<usize>,
) -> (SpdSystem, NodalField) {
    let constrained = system.constrained(gamma1);
    let mut rhs = rhs.clone();
    constrained.apply_dirichlet_rhs(&mut rhs);
    (constrained, rhs)
}

/// Solves the SPD system to a relative residual of [`SOLVE_RTOL`], using
/// the cached Cholesky factorization (computed on first use). One step of
/// iterative refinement is applied if the direct solve falls short.
pub fn solve_spd(system: &SpdSystem, rhs: &NodalField) -> Result<NodalField, SfemError> {
    assert_eq!(rhs.len(), system.n());
    let llt = system.factorization()?;
    let n = system.n();
    let mut b = Mat::<f64>::zeros(n, 1);
    for i in 0..n {
        b[(i, 0)] = rhs[i];
    }
    let x = llt.solve(&b);
    let mut solution = NodalField::from_vec((0..n).map(|i| x[(i, 0)]).collect());

    let rhs_norm = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
    if rhs_norm == 0.0 {
        return Ok(NodalField::zeros(n));
    }
    let residual_norm = |sol: &NodalField| {
        let ax = system.apply(sol);
        ax.iter()
            .zip(rhs.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    };
    let mut achieved = residual_norm(&solution);
    if achieved > SOLVE_RTOL * rhs_norm {
        // one refinement pass
        let ax = system.apply(&solution);
        let mut r = Mat::<f64>::zeros(n, 1);
        for i in 0..n {
            r[(i, 0)] = rhs[i] - ax[i];
        }
        let dx = llt.solve(&r);
        for i in 0..n {
            solution[i] += dx[(i, 0)];
        }
        achieved = residual_norm(&solution);
        if achieved > SOLVE_RTOL * rhs_norm {
            return Err(SfemError::ResidualTooLarge {
                achieved: achieved / rhs_norm,
                required: SOLVE_RTOL,
            });
        }
    }
    Ok(solution)
}
