//! Built-in test surfaces: unit hemisphere, torus of revolution, planar
//! strip, and unit disc. One refinement level quadruples the face count.

use std::collections::HashMap;

use thiserror::Error;

use crate::mesh::{TriangleMesh, Vec3};

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("invalid fixture parameter: {0}")]
    BadParameter(String),
}

/// Unit hemisphere `x > 0`, built by subdividing the four `x >= 0` faces of
/// the octahedron and projecting onto the sphere. The boundary circle lies
/// exactly in the plane `x = 0` and every vertex has unit norm.
///
/// `level` subdivisions give `4^(level+1)` faces.
pub fn hemisphere(level: u32) -> Result<TriangleMesh, FixtureError> {
    if level > 12 {
        return Err(FixtureError::BadParameter(format!(
            "hemisphere level {level} too large"
        )));
    }
    let mut vertices = vec![
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
        Vec3::new(0.0, -1.0, 0.0),
        Vec3::new(0.0, 0.0, -1.0),
    ];
    let mut faces: Vec<[usize; 3]> = vec![[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 1]];
    for _ in 0..level {
        subdivide_on_sphere(&mut vertices, &mut faces);
    }
    Ok(TriangleMesh::new(vertices, faces).expect("generated hemisphere is valid"))
}

fn subdivide_on_sphere(vertices: &mut Vec<Vec3>, faces: &mut Vec<[usize; 3]>) {
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoints.entry(key).or_insert_with(|| {
            let m = (vertices[a] + vertices[b]).normalize();
            vertices.push(m);
            vertices.len() - 1
        })
    };
    let mut refined = Vec::with_capacity(faces.len() * 4);
    for &[a, b, c] in faces.iter() {
        let ab = midpoint(a, b, vertices);
        let bc = midpoint(b, c, vertices);
        let ca = midpoint(c, a, vertices);
        refined.push([a, ab, ca]);
        refined.push([ab, b, bc]);
        refined.push([ca, bc, c]);
        refined.push([ab, bc, ca]);
    }
    *faces = refined;
}

/// Torus of revolution around the y axis: centerline radius `r_major`,
/// tube radius `r_minor`, so `(r_major - sqrt(x^2 + z^2))^2 + y^2 =
/// r_minor^2`. A structured grid of `16*2^level` major by `6*2^level`
/// minor divisions, split into triangles (`192 * 4^level` faces).
pub fn torus(r_major: f64, r_minor: f64, level: u32) -> Result<TriangleMesh, FixtureError> {
    if !(r_major > r_minor && r_minor > 0.0) {
        return Err(FixtureError::BadParameter(format!(
            "torus radii must satisfy r_major > r_minor > 0 (got {r_major}, {r_minor})"
        )));
    }
    if level > 10 {
        return Err(FixtureError::BadParameter(format!(
            "torus level {level} too large"
        )));
    }
    let n_major = 16usize << level;
    let n_minor = 6usize << level;
    let mut vertices = Vec::with_capacity(n_major * n_minor);
    for i in 0..n_major {
        let u = 2.0 * std::f64::consts::PI * i as f64 / n_major as f64;
        for j in 0..n_minor {
            let v = 2.0 * std::f64::consts::PI * j as f64 / n_minor as f64;
            let rho = r_major + r_minor * v.cos();
            vertices.push(Vec3::new(rho * u.cos(), r_minor * v.sin(), rho * u.sin()));
        }
    }
    let idx = |i: usize, j: usize| (i % n_major) * n_minor + (j % n_minor);
    let mut faces = Vec::with_capacity(2 * n_major * n_minor);
    for i in 0..n_major {
        for j in 0..n_minor {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            // (a, d, c) / (a, c, b) orients normals outward
            faces.push([a, d, c]);
            faces.push([a, c, b]);
        }
    }
    Ok(TriangleMesh::new(vertices, faces).expect("generated torus is valid"))
}

/// Planar strip `[-half_length, half_length] x [0, width]` in the plane
/// `z = 0`, with near-square cells: `2^level` divisions across the width
/// and proportionally many along the length.
pub fn strip(half_length: f64, width: f64, level: u32) -> Result<TriangleMesh, FixtureError> {
    if !(half_length > 0.0 && width > 0.0) {
        return Err(FixtureError::BadParameter(format!(
            "strip dimensions must be positive (got {half_length}, {width})"
        )));
    }
    if level > 12 {
        return Err(FixtureError::BadParameter(format!(
            "strip level {level} too large"
        )));
    }
    let n_y = 1usize << level;
    let aspect = (2.0 * half_length / width).round().max(1.0) as usize;
    let n_x = aspect << level;
    let mut vertices = Vec::with_capacity((n_x + 1) * (n_y + 1));
    for i in 0..=n_x {
        let x = -half_length + 2.0 * half_length * i as f64 / n_x as f64;
        for j in 0..=n_y {
            let y = width * j as f64 / n_y as f64;
            vertices.push(Vec3::new(x, y, 0.0));
        }
    }
    let idx = |i: usize, j: usize| i * (n_y + 1) + j;
    let mut faces = Vec::with_capacity(2 * n_x * n_y);
    for i in 0..n_x {
        for j in 0..n_y {
            faces.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            faces.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    Ok(TriangleMesh::new(vertices, faces).expect("generated strip is valid"))
}

/// Unit disc in the plane `z = 0`, meshed as `rings` concentric rings with
/// `6 j` vertices on ring `j`; `6 * rings^2` faces. The outer ring lies
/// exactly on the unit circle.
pub fn disc(rings: u32) -> Result<TriangleMesh, FixtureError> {
    if rings == 0 {
        return Err(FixtureError::BadParameter(
            "disc needs at least one ring".into(),
        ));
    }
    let n = rings as usize;
    let ring_start = |j: usize| if j == 0 { 0 } else { 1 + 3 * j * (j - 1) };
    let mut vertices = vec![Vec3::new(0.0, 0.0, 0.0)];
    for j in 1..=n {
        let r = j as f64 / n as f64;
        let count = 6 * j;
        for k in 0..count {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
            vertices.push(Vec3::new(r * theta.cos(), r * theta.sin(), 0.0));
        }
    }
    let mut faces = Vec::with_capacity(6 * n * n);
    // center fan
    for k in 0..6usize {
        faces.push([0, ring_start(1) + k, ring_start(1) + (k + 1) % 6]);
    }
    // annuli: merge the two vertex rings by angle
    for j in 2..=n {
        let inner_count = 6 * (j - 1);
        let outer_count = 6 * j;
        let inner_v = |k: usize| ring_start(j - 1) + k % inner_count;
        let outer_v = |k: usize| ring_start(j) + k % outer_count;
        let mut ki = 0usize;
        let mut ko = 0usize;
        for _ in 0..(inner_count + outer_count) {
            let advance_outer = ko < outer_count
                && (ki == inner_count
                    || (ko + 1) as f64 / outer_count as f64
                        <= (ki + 1) as f64 / inner_count as f64);
            if advance_outer {
                faces.push([inner_v(ki), outer_v(ko), outer_v(ko + 1)]);
                ko += 1;
            } else {
                faces.push([inner_v(ki), outer_v(ko), inner_v(ki + 1)]);
                ki += 1;
            }
        }
    }
    Ok(TriangleMesh::new(vertices, faces).expect("generated disc is valid"))
}
