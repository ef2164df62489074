//! Reference distances: closed forms on the sphere, hemisphere and torus,
//! the exact one-dimensional p-profile, and exact shortest edge-graph
//! distances.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};

use thiserror::Error;

use crate::mesh::{TriangleMesh, Vec3};
use crate::sfem::NodalField;

/// How far off the surface an input point may be before it is rejected.
pub const SURFACE_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("point ({x}, {y}, {z}) is not on the expected surface (residual {residual:.3e})")]
    OffSurface {
        x: f64,
        y: f64,
        z: f64,
        residual: f64,
    },
    #[error("source set is empty")]
    EmptySourceSet,
}

fn off_surface(p: &Vec3, residual: f64) -> OracleError {
    OracleError::OffSurface {
        x: p.x,
        y: p.y,
        z: p.z,
        residual,
    }
}

/// Great-circle distance between two points of the unit sphere
/// (spherical law of cosines). Symmetric by construction; the dot product
/// is clamped to kill floating-point drift just outside `[-1, 1]`.
pub fn sphere_point_distance(x: &Vec3, q: &Vec3) -> Result<f64, OracleError> {
    for point in [x, q] {
        let residual = (point.norm() - 1.0).abs();
        if residual > SURFACE_TOL {
            return Err(off_surface(point, residual));
        }
    }
    Ok(x.dot(q).clamp(-1.0, 1.0).acos())
}

/// Nominal feature point of the hemisphere studies.
pub fn hemisphere_feature_point() -> Vec3 {
    Vec3::new(2f64.sqrt() / 2.0, 0.5, 0.5)
}

/// Distance on the unit hemisphere `x > 0` to the union of `point` and the
/// half-equator arc `{z = 0, y >= 0}`.
///
/// The arc runs from (1, 0, 0) to (0, 1, 0). For a query whose foot on the
/// equator has `y >= 0`, the nearest arc point is that foot and the
/// distance is `|asin(z)|`; otherwise (foot at `y < 0`, reachable only for
/// queries with `y < 0`) the nearest arc point is the endpoint (1, 0, 0),
/// at distance `acos(x)`. Validated against dense sampling of the arc in
/// the tests.
pub fn hemisphere_curve_point_distance(x: &Vec3, point: &Vec3) -> Result<f64, OracleError> {
    let residual = (x.norm() - 1.0).abs();
    if residual > SURFACE_TOL || x.x < -SURFACE_TOL {
        return Err(off_surface(x, residual.max(-x.x)));
    }
    let arc_distance = if x.y >= 0.0 {
        x.z.clamp(-1.0, 1.0).asin().abs()
    } else {
        x.x.clamp(-1.0, 1.0).acos()
    };
    let point_distance = sphere_point_distance(x, point)?;
    Ok(arc_distance.min(point_distance))
}

/// Distance on the torus
/// `(r_major - sqrt(x^2 + z^2))^2 + y^2 = r_minor^2`
/// to the two circles in the plane `y = 0`.
///
/// Meridians (circles of constant major angle) are geodesics of a surface
/// of revolution and cross both feature circles, so the distance is the
/// shorter meridian arc: `r_minor * min(|phi|, pi - |phi|)` with `phi` the
/// minor angle. Validated against edge-graph distances in the tests.
pub fn torus_meridian_distance(x: &Vec3, r_major: f64, r_minor: f64) -> Result<f64, OracleError> {
    let rho = (x.x * x.x + x.z * x.z).sqrt();
    let residual = (((rho - r_major).powi(2) + x.y * x.y).sqrt() - r_minor).abs();
    if residual > SURFACE_TOL {
        return Err(off_surface(x, residual));
    }
    let phi = x.y.atan2(rho - r_major).abs();
    Ok(r_minor * phi.min(std::f64::consts::PI - phi))
}

/// Exact solution of the one-dimensional p-Poisson problem on `(-1, 1)`
/// with `u(0) = 0` and zero Neumann data at the ends:
/// `u_p(x) = -(p-1)/p (1-|x|)^(p/(p-1)) + (p-1)/p`.
pub fn exact_1d_p_solution(x: f64, p: f64) -> f64 {
    assert!((-1.0..=1.0).contains(&x), "x = {x} outside [-1, 1]");
    assert!(p >= 2.0, "p = {p} below 2");
    let q = (p - 1.0) / p;
    -q * (1.0 - x.abs()).powf(p / (p - 1.0)) + q
}

/// Multi-source Dijkstra over the mesh edge graph with Euclidean edge
/// weights: the exact shortest edge-path distance to the source set.
/// Unreachable vertices receive `+inf`.
pub fn graph_distance(
    mesh: &TriangleMesh,
    gamma1: &BTreeSet<usize>,
) -> Result<NodalField, OracleError> {
    if gamma1.is_empty() {
        return Err(OracleError::EmptySourceSet);
    }

    // adjacency in CSR form
    let n = mesh.n_vertices();
    let mut degree = vec![0usize; n];
    for e in mesh.edges() {
        degree[e.vertices[0]] += 1;
        degree[e.vertices[1]] += 1;
    }
    let mut offsets = vec![0usize; n + 1];
    for v in 0..n {
        offsets[v + 1] = offsets[v] + degree[v];
    }
    let mut neighbors = vec![(0usize, 0.0f64); offsets[n]];
    let mut cursor = offsets.clone();
    for e in mesh.edges() {
        let [a, b] = e.vertices;
        let length = (mesh.vertex(a) - mesh.vertex(b)).norm();
        neighbors[cursor[a]] = (b, length);
        cursor[a] += 1;
        neighbors[cursor[b]] = (a, length);
        cursor[b] += 1;
    }

    struct Entry {
        dist: f64,
        vertex: usize,
    }
    impl PartialEq for Entry {
        fn eq(&self, other: &Self) -> bool {
            self.dist == other.dist && self.vertex == other.vertex
        }
    }
    impl Eq for Entry {}
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> Ordering {
            // reversed: BinaryHeap is a max-heap
            other
                .dist
                .total_cmp(&self.dist)
                .then_with(|| other.vertex.cmp(&self.vertex))
        }
    }

    let mut dist = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();
    for &s in gamma1 {
        assert!(s < n, "source vertex out of range");
        dist[s] = 0.0;
        heap.push(Entry { dist: 0.0, vertex: s });
    }
    while let Some(Entry { dist: d, vertex }) = heap.pop() {
        if d > dist[vertex] {
            continue;
        }
        for &(next, weight) in &neighbors[offsets[vertex]..offsets[vertex + 1]] {
            let candidate = d + weight;
            if candidate < dist[next] {
                dist[next] = candidate;
                heap.push(Entry {
                    dist: candidate,
                    vertex: next,
                });
            }
        }
    }
    Ok(NodalField::from_vec(dist))
}

/// Evaluates a pointwise oracle at every mesh vertex.
pub fn field_on_mesh(
    mesh: &TriangleMesh,
    oracle: impl Fn(&Vec3) -> Result<f64, OracleError>,
) -> Result<NodalField, OracleError> {
    let mut values = Vec::with_capacity(mesh.n_vertices());
    for v in mesh.vertices() {
        values.push(oracle(v)?);
    }
    Ok(NodalField::from_vec(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn sphere_distance_basics() {
        let q = hemisphere_feature_point();
        assert_eq!(sphere_point_distance(&q, &q).unwrap(), 0.0);
        let x = Vec3::new(1.0, 0.0, 0.0);
        let d = sphere_point_distance(&x, &q).unwrap();
        assert!((d - PI / 4.0).abs() < 1e-14);
        let y = Vec3::new(0.0, 1.0, 0.0);
        assert!((sphere_point_distance(&x, &y).unwrap() - PI / 2.0).abs() < 1e-15);
        // exact symmetry
        assert_eq!(
            sphere_point_distance(&x, &q).unwrap(),
            sphere_point_distance(&q, &x).unwrap()
        );
        assert!(sphere_point_distance(&(x * 1.1), &q).is_err());
    }

    #[test]
    fn hemisphere_distance_zero_on_features() {
        let q = hemisphere_feature_point();
        assert_eq!(hemisphere_curve_point_distance(&q, &q).unwrap(), 0.0);
        // (1,0,0) lies on the arc (z = 0, y = 0 boundary case)
        let on_arc = Vec3::new(1.0, 0.0, 0.0);
        assert_eq!(hemisphere_curve_point_distance(&on_arc, &q).unwrap(), 0.0);
        let mid_arc = Vec3::new(2f64.sqrt() / 2.0, 2f64.sqrt() / 2.0, 0.0);
        assert!(hemisphere_curve_point_distance(&mid_arc, &q).unwrap() < 1e-12);
    }

    #[test]
    fn hemisphere_distance_matches_dense_arc_sampling() {
        // Brute force: minimum of pairwise sphere distances over a dense
        // sampling of the arc plus the point feature.
        let q = hemisphere_feature_point();
        let n_arc = 1_000_000usize;
        let mut arc_cos = Vec::with_capacity(n_arc);
        let mut arc_sin = Vec::with_capacity(n_arc);
        for k in 0..n_arc {
            let t = (PI / 2.0) * k as f64 / (n_arc - 1) as f64;
            arc_cos.push(t.cos());
            arc_sin.push(t.sin());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut worst = 0.0f64;
        for _ in 0..10_000 {
            // uniform point on the x > 0 hemisphere
            let x = loop {
                let v = Vec3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                let n = v.norm();
                if n > 1e-3 && n <= 1.0 && v.x > 1e-6 {
                    break v / n;
                }
            };
            // max dot product over the arc = min great-circle distance
            let mut best_dot = f64::NEG_INFINITY;
            for k in 0..n_arc {
                let dot = x.x * arc_cos[k] + x.y * arc_sin[k];
                if dot > best_dot {
                    best_dot = dot;
                }
            }
            let brute = best_dot
                .clamp(-1.0, 1.0)
                .acos()
                .min(sphere_point_distance(&x, &q).unwrap());
            let ours = hemisphere_curve_point_distance(&x, &q).unwrap();
            worst = worst.max((ours - brute).abs());
        }
        assert!(worst < 2e-3, "worst deviation {worst}");
    }

    #[test]
    fn torus_distance_closed_forms() {
        let (r_major, r_minor) = (2.0, 1.0);
        // outer circle
        let outer = Vec3::new(3.0, 0.0, 0.0);
        assert_eq!(torus_meridian_distance(&outer, r_major, r_minor).unwrap(), 0.0);
        // inner circle
        let inner = Vec3::new(-1.0, 0.0, 0.0);
        assert!(torus_meridian_distance(&inner, r_major, r_minor).unwrap() < 1e-15);
        // tube top: quarter of the meridian circle away from both circles
        let top = Vec3::new(2.0, 1.0, 0.0);
        let d = torus_meridian_distance(&top, r_major, r_minor).unwrap();
        assert!((d - r_minor * PI / 2.0).abs() < 1e-14);
        assert!(torus_meridian_distance(&Vec3::new(3.5, 0.0, 0.0), r_major, r_minor).is_err());
    }

    #[test]
    fn torus_distance_is_bounded_by_quarter_meridian() {
        let mesh = fixtures::torus(2.0, 1.0, 2).unwrap();
        for v in mesh.vertices() {
            let d = torus_meridian_distance(v, 2.0, 1.0).unwrap();
            assert!((0.0..=PI / 2.0 + 1e-12).contains(&d));
        }
    }

    #[test]
    fn torus_oracle_sandwiched_by_graph_distance() {
        // Edge paths live on the polyhedral surface: they cannot beat the
        // smooth geodesic by more than the chord-versus-arc deficit, and
        // they overestimate it apart from that deficit.
        let mesh = fixtures::torus(2.0, 1.0, 3).unwrap();
        let gamma: BTreeSet<usize> = (0..mesh.n_vertices())
            .filter(|&v| mesh.vertex(v).y.abs() < 1e-9)
            .collect();
        let graph = graph_distance(&mesh, &gamma).unwrap();
        let h = mesh.stats().h;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let v = rng.gen_range(0..mesh.n_vertices());
            let exact = torus_meridian_distance(&mesh.vertex(v), 2.0, 1.0).unwrap();
            let chord_deficit = exact * h * h / 8.0 + 1e-9;
            assert!(
                exact <= graph[v] + chord_deficit,
                "vertex {v}: exact {exact} vs graph {}",
                graph[v]
            );
            assert!(exact >= graph[v] - 3.0 * h);
        }
    }

    #[test]
    fn exact_1d_profile_values() {
        for p in [2.0, 10.0, 160.0] {
            assert_eq!(exact_1d_p_solution(0.0, p), 0.0);
            let boundary = exact_1d_p_solution(1.0, p);
            assert!((boundary - (p - 1.0) / p).abs() < 1e-15);
            // pointwise error against |x| at the ends is exactly 1/p
            assert!((1.0 - boundary - 1.0 / p).abs() < 1e-15);
            assert_eq!(exact_1d_p_solution(-1.0, p), boundary);
        }
        let v = exact_1d_p_solution(0.5, 2.0);
        assert!((v - 3.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn graph_distance_tiny_cases() {
        use crate::mesh::TriangleMesh;
        let mesh = TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(2.0, 0.0, 0.0),
                Vec3::new(0.0, 1.5, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let d = graph_distance(&mesh, &BTreeSet::from([0])).unwrap();
        assert_eq!(d[0], 0.0);
        assert_eq!(d[1], 2.0);
        assert_eq!(d[2], 1.5);

        let side = (0..3).map(|_| 1.0f64).sum::<f64>() / 3.0; // 1.0
        let eq = TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(side, 0.0, 0.0),
                Vec3::new(side / 2.0, side * 3f64.sqrt() / 2.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let d = graph_distance(&eq, &BTreeSet::from([0])).unwrap();
        assert!((d[1] - 1.0).abs() < 1e-15);
        assert!((d[2] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn graph_distance_matches_floyd_warshall_on_icosahedron() {
        let mesh = crate::test_meshes::unit_edge_icosahedron();
        let n = mesh.n_vertices();
        // exhaustive all-pairs shortest paths over the edge graph
        let mut all_pairs = vec![vec![f64::INFINITY; n]; n];
        for v in 0..n {
            all_pairs[v][v] = 0.0;
        }
        for e in mesh.edges() {
            let [a, b] = e.vertices;
            let w = (mesh.vertex(a) - mesh.vertex(b)).norm();
            all_pairs[a][b] = w;
            all_pairs[b][a] = w;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = all_pairs[i][k] + all_pairs[k][j];
                    if via < all_pairs[i][j] {
                        all_pairs[i][j] = via;
                    }
                }
            }
        }
        for source in 0..n {
            let d = graph_distance(&mesh, &BTreeSet::from([source])).unwrap();
            for v in 0..n {
                assert!((d[v] - all_pairs[source][v]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn oracle_fields_nonnegative_and_zero_on_features() {
        let mesh = fixtures::torus(2.0, 1.0, 2).unwrap();
        let field =
            field_on_mesh(&mesh, |v| torus_meridian_distance(v, 2.0, 1.0)).unwrap();
        for (v, &d) in field.iter().enumerate() {
            assert!(d >= 0.0);
            if mesh.vertex(v).y.abs() < 1e-12 {
                assert!(d < 1e-12);
            } else {
                assert!(d > 0.0);
            }
        }
    }

    #[test]
    fn graph_distance_dominates_analytic_distance() {
        for mesh in [fixtures::torus(2.0, 1.0, 2).unwrap()] {
            let gamma: BTreeSet<usize> = (0..mesh.n_vertices())
                .filter(|&v| mesh.vertex(v).y.abs() < 1e-9)
                .collect();
            let graph = graph_distance(&mesh, &gamma).unwrap();
            let h = mesh.stats().h;
            for v in 0..mesh.n_vertices() {
                let exact = torus_meridian_distance(&mesh.vertex(v), 2.0, 1.0).unwrap();
                // slack: edge chords undercut surface arcs by O(h^2)
                assert!(graph[v] >= exact - exact * h * h / 8.0 - 1e-9);
            }
        }
    }
}
