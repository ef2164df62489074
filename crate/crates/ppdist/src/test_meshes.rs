//! Small meshes shared by unit tests.

use crate::mesh::{TriangleMesh, Vec3};

pub fn icosahedron_faces() -> [[usize; 3]; 20] {
    [
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 3],
    ]
}

pub fn icosahedron_vertices() -> [(f64, f64, f64); 12] {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
}

/// Icosahedron scaled to unit edge length.
pub fn unit_edge_icosahedron() -> TriangleMesh {
    let vertices: Vec<Vec3> = icosahedron_vertices()
        .iter()
        .map(|&(x, y, z)| Vec3::new(x / 2.0, y / 2.0, z / 2.0))
        .collect();
    TriangleMesh::new(vertices, icosahedron_faces().to_vec()).unwrap()
}
