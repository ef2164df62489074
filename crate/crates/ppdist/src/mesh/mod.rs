//! Triangulated surfaces: loading, validation, queries, feature selection,
//! and vertex-noise perturbation.

use std::collections::HashMap;

use nalgebra::Vector3;
use thiserror::Error;

pub mod features;
mod io;
mod perturb;

pub use features::{
    Axis,
    select_features, BoundaryPartition, CoordCondition, FeatureSelection, FeatureSelector,
};
pub use io::{load_mesh, load_mesh_auto, save_obj, MeshFormat};
pub use perturb::{perturb_vertices, PerturbReport};

pub type Vec3 = Vector3<f64>;

/// Fraction of `h^2` below which a face counts as degenerate at load time.
pub const DEGENERATE_AREA_FRACTION: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("mesh has no faces")]
    Empty,
    #[error("face {face} references vertex {vertex}, but the mesh has {n_vertices} vertices")]
    IndexOutOfRange {
        face: usize,
        vertex: usize,
        n_vertices: usize,
    },
    #[error("face {face} repeats vertex {vertex}")]
    RepeatedVertex { face: usize, vertex: usize },
    #[error("non-manifold edge ({a}, {b}) shared by {count} faces")]
    NonManifoldEdge { a: usize, b: usize, count: usize },
    #[error("faces {face_a} and {face_b} traverse edge ({a}, {b}) in the same direction")]
    InconsistentOrientation {
        a: usize,
        b: usize,
        face_a: usize,
        face_b: usize,
    },
    #[error("degenerate face {face}: area {area:.3e} below threshold {threshold:.3e}")]
    DegenerateFace {
        face: usize,
        area: f64,
        threshold: f64,
    },
    #[error("vertex index {vertex} out of range ({n_vertices} vertices)")]
    VertexOutOfRange { vertex: usize, n_vertices: usize },
    #[error("feature selection produced an empty Dirichlet set")]
    EmptyFeatureSet,
}

/// A unique (undirected) mesh edge and the faces on either side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    /// Endpoint vertex indices with `vertices[0] < vertices[1]`.
    pub vertices: [usize; 2],
    pub face: usize,
    /// Second adjacent face; `None` on the boundary.
    pub opposite_face: Option<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.opposite_face.is_none()
    }
}

/// Basic size statistics of a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStats {
    /// Average edge length over unique edges.
    pub ell: f64,
    /// Maximum edge length.
    pub h: f64,
    pub n_vertices: usize,
    pub n_faces: usize,
    pub n_boundary_loops: usize,
}

/// An embedded, oriented, edge-manifold triangle mesh.
///
/// Immutable after construction; derived quantities (areas, normals,
/// adjacency, edges, boundary structure) are built once and shared.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    face_areas: Vec<f64>,
    face_normals: Vec<Vec3>,
    edges: Vec<Edge>,
    vertex_faces: Vec<Vec<usize>>,
    boundary_vertex: Vec<bool>,
    n_boundary_loops: usize,
}

impl TriangleMesh {
    /// Builds a mesh and checks the structural invariants: valid indices,
    /// edge-manifoldness, consistent orientation, and no degenerate faces.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if faces.is_empty() {
            return Err(MeshError::Empty);
        }
        let n_vertices = vertices.len();
        for (f, face) in faces.iter().enumerate() {
            for &v in face {
                if v >= n_vertices {
                    return Err(MeshError::IndexOutOfRange {
                        face: f,
                        vertex: v,
                        n_vertices,
                    });
                }
            }
            if face[0] == face[1] || face[1] == face[2] || face[2] == face[0] {
                let repeated = if face[0] == face[1] { face[0] } else { face[2] };
                return Err(MeshError::RepeatedVertex {
                    face: f,
                    vertex: repeated,
                });
            }
        }

        let edges = build_edges(&faces)?;

        // Degeneracy threshold is relative to the largest edge.
        let h = edges
            .iter()
            .map(|e| (vertices[e.vertices[1]] - vertices[e.vertices[0]]).norm())
            .fold(0.0, f64::max);
        let threshold = DEGENERATE_AREA_FRACTION * h * h;
        let (face_areas, face_normals) = face_geometry(&vertices, &faces);
        for (f, &area) in face_areas.iter().enumerate() {
            if area <= threshold {
                return Err(MeshError::DegenerateFace {
                    face: f,
                    area,
                    threshold,
                });
            }
        }

        let vertex_faces = vertex_face_adjacency(n_vertices, &faces);
        let (boundary_vertex, n_boundary_loops) = boundary_structure(n_vertices, &faces, &edges);

        Ok(Self {
            vertices,
            faces,
            face_areas,
            face_normals,
            edges,
            vertex_faces,
            boundary_vertex,
            n_boundary_loops,
        })
    }

    /// Rebuilds geometry for new vertex positions, keeping connectivity.
    /// Does not re-check degeneracy; used by [`perturb_vertices`].
    pub(crate) fn with_vertices_unchecked(&self, vertices: Vec<Vec3>) -> Self {
        assert_eq!(vertices.len(), self.vertices.len());
        let (face_areas, face_normals) = face_geometry(&vertices, &self.faces);
        Self {
            vertices,
            faces: self.faces.clone(),
            face_areas,
            face_normals,
            edges: self.edges.clone(),
            vertex_faces: self.vertex_faces.clone(),
            boundary_vertex: self.boundary_vertex.clone(),
            n_boundary_loops: self.n_boundary_loops,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Vec3 {
        self.vertices[v]
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> [usize; 3] {
        self.faces[f]
    }

    pub fn face_positions(&self, f: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        self.face_areas[f]
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    /// Unit face normal; the zero vector for a collapsed (perturbed) face.
    pub fn face_normal(&self, f: usize) -> Vec3 {
        self.face_normals[f]
    }

    pub fn total_area(&self) -> f64 {
        self.face_areas.iter().sum()
    }

    /// Unique edges, sorted by endpoint indices.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn faces_around_vertex(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn boundary_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_vertices()).filter(|&v| self.boundary_vertex[v])
    }

    pub fn n_boundary_loops(&self) -> usize {
        self.n_boundary_loops
    }

    pub fn stats(&self) -> MeshStats {
        let mut total = 0.0;
        let mut h: f64 = 0.0;
        for e in &self.edges {
            let len = (self.vertices[e.vertices[1]] - self.vertices[e.vertices[0]]).norm();
            total += len;
            h = h.max(len);
        }
        MeshStats {
            ell: total / self.edges.len() as f64,
            h,
            n_vertices: self.n_vertices(),
            n_faces: self.n_faces(),
            n_boundary_loops: self.n_boundary_loops,
        }
    }
}

/// Average edge length and maximum edge length.
pub fn mesh_stats(mesh: &TriangleMesh) -> MeshStats {
    mesh.stats()
}

fn face_geometry(vertices: &[Vec3], faces: &[[usize; 3]]) -> (Vec<f64>, Vec<Vec3>) {
    let mut areas = Vec::with_capacity(faces.len());
    let mut normals = Vec::with_capacity(faces.len());
    for face in faces {
        let [a, b, c] = *face;
        let cross = (vertices[b] - vertices[a]).cross(&(vertices[c] - vertices[a]));
        let doubled = cross.norm();
        areas.push(0.5 * doubled);
        if doubled > 0.0 {
            normals.push(cross / doubled);
        } else {
            normals.push(Vec3::zeros());
        }
    }
    (areas, normals)
}

fn vertex_face_adjacency(n_vertices: usize, faces: &[[usize; 3]]) -> Vec<Vec<usize>> {
    let mut adjacency = vec![Vec::new(); n_vertices];
    for (f, face) in faces.iter().enumerate() {
        for &v in face {
            adjacency[v].push(f);
        }
    }
    adjacency
}

/// Builds the unique edge list, rejecting non-manifold edges and
/// orientation conflicts (a directed edge appearing in two faces).
fn build_edges(faces: &[[usize; 3]]) -> Result<Vec<Edge>, MeshError> {
    struct Entry {
        face: usize,
        opposite_face: Option<usize>,
        // direction the first face traverses the (min, max) key
        first_forward: bool,
    }
    let mut map: HashMap<(usize, usize), Entry> = HashMap::with_capacity(faces.len() * 3 / 2);
    for (f, face) in faces.iter().enumerate() {
        for k in 0..3 {
            let a = face[k];
            let b = face[(k + 1) % 3];
            let key = (a.min(b), a.max(b));
            let forward = a < b;
            match map.get_mut(&key) {
                None => {
                    map.insert(
                        key,
                        Entry {
                            face: f,
                            opposite_face: None,
                            first_forward: forward,
                        },
                    );
                }
                Some(entry) => {
                    if entry.opposite_face.is_some() {
                        return Err(MeshError::NonManifoldEdge {
                            a: key.0,
                            b: key.1,
                            count: 3,
                        });
                    }
                    if entry.first_forward == forward {
                        return Err(MeshError::InconsistentOrientation {
                            a: key.0,
                            b: key.1,
                            face_a: entry.face,
                            face_b: f,
                        });
                    }
                    entry.opposite_face = Some(f);
                }
            }
        }
    }
    // Sorted edge order keeps sums over edges deterministic.
    let mut edges: Vec<Edge> = map
        .into_iter()
        .map(|(key, entry)| Edge {
            vertices: [key.0, key.1],
            face: entry.face,
            opposite_face: entry.opposite_face,
        })
        .collect();
    edges.sort_unstable_by_key(|e| e.vertices);
    Ok(edges)
}

/// Marks boundary vertices and counts boundary loops by walking the
/// directed boundary half-edges.
fn boundary_structure(
    n_vertices: usize,
    faces: &[[usize; 3]],
    edges: &[Edge],
) -> (Vec<bool>, usize) {
    let mut boundary_vertex = vec![false; n_vertices];
    // next[a] = b for each boundary half-edge a -> b, following face
    // orientation of the single adjacent face.
    let mut next: HashMap<usize, usize> = HashMap::new();
    for e in edges {
        if !e.is_boundary() {
            continue;
        }
        let [u, v] = e.vertices;
        boundary_vertex[u] = true;
        boundary_vertex[v] = true;
        let face = faces[e.face];
        for k in 0..3 {
            let a = face[k];
            let b = face[(k + 1) % 3];
            if (a == u && b == v) || (a == v && b == u) {
                next.insert(a, b);
            }
        }
    }
    let mut loops = 0;
    let mut visited: HashMap<usize, bool> = next.keys().map(|&v| (v, false)).collect();
    let starts: Vec<usize> = next.keys().copied().collect();
    for start in starts {
        if visited[&start] {
            continue;
        }
        loops += 1;
        let mut v = start;
        loop {
            visited.insert(v, true);
            v = match next.get(&v) {
                Some(&w) => w,
                None => break,
            };
            if v == start {
                break;
            }
        }
    }
    (boundary_vertex, loops)
}
