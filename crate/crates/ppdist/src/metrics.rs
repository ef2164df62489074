//! Error metrics against reference distances, convergence rates, and the
//! distance-property audits (gradient norm, triangle inequality).

use thiserror::Error;

use crate::mesh::TriangleMesh;
use crate::sfem::{assemble_load, face_gradient, NodalField};

/// Vertices where reference and computed values are both below this are
/// excluded from SMAPE (the summand is 0/0 there, e.g. on the feature set).
pub const SMAPE_SKIP_THRESHOLD: f64 = 1e-12;

/// Absolute slack of the triangle-inequality audit.
pub const AUDIT_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("fields have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("every vertex was skipped; SMAPE is undefined")]
    AllSkipped,
    #[error("reference field has zero norm; relative error is undefined")]
    ZeroReference,
    #[error("convergence rates need at least two error values")]
    TooFewErrors,
    #[error("error values must be positive, got {0}")]
    NonPositiveError(f64),
}

/// Error summary of a computed field against a reference field.
#[derive(Debug, Clone, Copy)]
pub struct ErrorReport {
    /// Symmetric mean absolute percentage error, in percent.
    pub smape: f64,
    pub l2_relative: f64,
    pub linf: f64,
    /// Vertices excluded from SMAPE because both fields vanish there.
    pub n_skipped: usize,
}

fn check_lengths(u: &NodalField, reference: &NodalField) -> Result<(), MetricsError> {
    if u.len() != reference.len() {
        return Err(MetricsError::LengthMismatch {
            left: u.len(),
            right: reference.len(),
        });
    }
    Ok(())
}

fn smape_with_count(u: &NodalField, reference: &NodalField) -> Result<(f64, usize), MetricsError> {
    check_lengths(u, reference)?;
    let mut total = 0.0;
    let mut included = 0usize;
    for (a, b) in u.iter().zip(reference.iter()) {
        let denom = (a.abs() + b.abs()) / 2.0;
        if a.abs() + b.abs() < SMAPE_SKIP_THRESHOLD {
            continue;
        }
        total += (b - a).abs() / denom;
        included += 1;
    }
    if included == 0 {
        return Err(MetricsError::AllSkipped);
    }
    Ok((100.0 * total / included as f64, u.len() - included))
}

/// Symmetric mean absolute percentage error in percent:
/// `(100/n) sum |ref_i - u_i| / ((|ref_i| + |u_i|) / 2)` over the vertices
/// where at least one of the two values is nonzero.
pub fn smape(u: &NodalField, reference: &NodalField) -> Result<f64, MetricsError> {
    smape_with_count(u, reference).map(|(value, _)| value)
}

/// Relative L2 error `|u - ref| / |ref|` in the lumped-mass norm (each
/// vertex weighted by a third of its adjacent face area).
pub fn l2_relative_error(
    mesh: &TriangleMesh,
    u: &NodalField,
    reference: &NodalField,
) -> Result<f64, MetricsError> {
    check_lengths(u, reference)?;
    assert_eq!(u.len(), mesh.n_vertices());
    let lumped = assemble_load(mesh);
    let mut err2 = 0.0;
    let mut ref2 = 0.0;
    for i in 0..u.len() {
        err2 += lumped[i] * (u[i] - reference[i]) * (u[i] - reference[i]);
        ref2 += lumped[i] * reference[i] * reference[i];
    }
    if ref2 == 0.0 {
        return Err(MetricsError::ZeroReference);
    }
    Ok((err2 / ref2).sqrt())
}

/// Maximum absolute vertex error.
pub fn linf_error(u: &NodalField, reference: &NodalField) -> Result<f64, MetricsError> {
    check_lengths(u, reference)?;
    Ok(u.iter()
        .zip(reference.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// All error metrics at once.
pub fn error_report(
    mesh: &TriangleMesh,
    u: &NodalField,
    reference: &NodalField,
) -> Result<ErrorReport, MetricsError> {
    let (smape, n_skipped) = smape_with_count(u, reference)?;
    Ok(ErrorReport {
        smape,
        l2_relative: l2_relative_error(mesh, u, reference)?,
        linf: linf_error(u, reference)?,
        n_skipped,
    })
}

/// Convergence rates of an error sequence sampled at doubling p:
/// `rate_k = log2(err_{k-1} / err_k)`.
pub fn convergence_rates(errors: &[f64]) -> Result<Vec<f64>, MetricsError> {
    if errors.len() < 2 {
        return Err(MetricsError::TooFewErrors);
    }
    if let Some(&bad) = errors.iter().find(|&&e| e <= 0.0) {
        return Err(MetricsError::NonPositiveError(bad));
    }
    Ok(errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect())
}

/// Normalized L1 deviation of the gradient norm from 1:
/// `sum_T area_T |1 - |grad u|_T| / sum_T area_T`. Zero for an exact
/// distance field, 1 for the zero field.
pub fn grad_deviation(mesh: &TriangleMesh, u: &NodalField) -> f64 {
    let grads = face_gradient(mesh, u);
    let mut weighted = 0.0;
    for f in 0..mesh.n_faces() {
        weighted += mesh.face_area(f) * (1.0 - grads[f].norm()).abs();
    }
    weighted / mesh.total_area()
}

/// Result of a two-source triangle-inequality audit.
#[derive(Debug, Clone)]
pub struct TriangleAudit {
    /// Per-vertex satisfaction of
    /// `u1[x] + u2[x] >= max(d12, d21) - AUDIT_TOL`. The two source
    /// vertices are satisfied by definition (the inequality degenerates to
    /// the identity there).
    pub flags: Vec<bool>,
    /// Number of `false` flags.
    pub violations: usize,
    /// `u1` read at the second source.
    pub d12: f64,
    /// `u2` read at the first source.
    pub d21: f64,
    /// `max(d12, d21)`, the bound actually tested.
    pub d_max: f64,
}

/// Audits `u1[x] + u2[x] >= max(d(q1, q2), d(q2, q1))` over all vertices,
/// where the two cross distances are read from the fields (they differ
/// slightly for approximate solvers, hence the max).
pub fn triangle_audit(
    mesh: &TriangleMesh,
    u1: &NodalField,
    u2: &NodalField,
    q1: usize,
    q2: usize,
) -> Result<TriangleAudit, MetricsError> {
    check_lengths(u1, u2)?;
    assert_eq!(u1.len(), mesh.n_vertices());
    assert!(q1 < mesh.n_vertices() && q2 < mesh.n_vertices());
    let d12 = u1[q2];
    let d21 = u2[q1];
    let d_max = d12.max(d21);
    let mut flags = Vec::with_capacity(mesh.n_vertices());
    let mut violations = 0usize;
    for v in 0..mesh.n_vertices() {
        let ok = v == q1 || v == q2 || u1[v] + u2[v] >= d_max - AUDIT_TOL;
        if !ok {
            violations += 1;
        }
        flags.push(ok);
    }
    Ok(TriangleAudit {
        flags,
        violations,
        d12,
        d21,
        d_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mesh::Vec3;
    use crate::oracles;

    #[test]
    fn smape_basics() {
        let a = NodalField::from_vec(vec![1.0, 2.0]);
        assert_eq!(smape(&a, &a).unwrap(), 0.0);

        let u = NodalField::from_vec(vec![1.0, 1.0]);
        let d = NodalField::from_vec(vec![1.0, 2.0]);
        let s = smape(&u, &d).unwrap();
        assert!((s - 100.0 / 2.0 * (1.0 / 1.5)).abs() < 1e-12, "smape {s}");
        // symmetric in its arguments
        assert_eq!(s, smape(&d, &u).unwrap());
    }

    #[test]
    fn smape_skips_joint_zeros() {
        let u = NodalField::from_vec(vec![0.0, 1.0]);
        let d = NodalField::from_vec(vec![0.0, 1.0]);
        let (value, skipped) = smape_with_count(&u, &d).unwrap();
        assert_eq!(value, 0.0);
        assert_eq!(skipped, 1);

        let zeros = NodalField::zeros(3);
        assert!(matches!(
            smape(&zeros, &zeros),
            Err(MetricsError::AllSkipped)
        ));
    }

    #[test]
    fn l2_error_homogeneity_and_exactness() {
        let mesh = fixtures::disc(4).unwrap();
        let d = NodalField::from_vec(
            mesh.vertices().iter().map(|v| 1.0 + v.x * v.x + v.y).collect(),
        );
        assert_eq!(l2_relative_error(&mesh, &d, &d).unwrap(), 0.0);
        let scaled = NodalField::from_vec(d.iter().map(|v| 1.1 * v).collect());
        let e = l2_relative_error(&mesh, &scaled, &d).unwrap();
        assert!((e - 0.1).abs() < 1e-12, "error {e}");
    }

    #[test]
    fn l2_error_invariant_under_rigid_motion() {
        let mesh = fixtures::disc(4).unwrap();
        let u = NodalField::from_vec(mesh.vertices().iter().map(|v| v.x + 0.3).collect());
        let d = NodalField::from_vec(mesh.vertices().iter().map(|v| v.y + 1.0).collect());
        let before = l2_relative_error(&mesh, &u, &d).unwrap();

        // rotate about an arbitrary axis and translate
        let rotation = nalgebra::Rotation3::from_axis_angle(
            &nalgebra::Unit::new_normalize(Vec3::new(1.0, 2.0, -0.5)),
            0.83,
        );
        let moved = crate::mesh::TriangleMesh::new(
            mesh.vertices()
                .iter()
                .map(|v| rotation * v + Vec3::new(5.0, -1.0, 2.0))
                .collect(),
            mesh.faces().to_vec(),
        )
        .unwrap();
        let after = l2_relative_error(&moved, &u, &d).unwrap();
        assert!((before - after).abs() < 1e-12 * before);
    }

    #[test]
    fn convergence_rate_basics() {
        assert_eq!(convergence_rates(&[0.1, 0.05]).unwrap(), vec![1.0]);
        let rates = convergence_rates(&[0.3, 0.3, 0.3]).unwrap();
        assert!(rates.iter().all(|&r| r == 0.0));
        assert!(convergence_rates(&[0.1]).is_err());
        assert!(convergence_rates(&[0.1, 0.0]).is_err());

        // reciprocal-p errors at doubling p converge at exactly rate 1
        let errors: Vec<f64> = [5.0, 10.0, 20.0, 40.0, 80.0, 160.0]
            .iter()
            .map(|p| 1.0 / p)
            .collect();
        for rate in convergence_rates(&errors).unwrap() {
            assert!((rate - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn convergence_rates_reproduce_published_study_column() {
        let l2 = [
            1.2928e-1, 6.2872e-2, 3.0476e-2, 1.4554e-2, 6.9663e-3, 3.4894e-3,
        ];
        let rates = convergence_rates(&l2).unwrap();
        let expected = [1.04, 1.04, 1.07, 1.06, 1.00];
        for (rate, want) in rates.iter().zip(expected) {
            assert!((rate - want).abs() <= 0.005, "rate {rate} vs {want}");
        }
    }

    #[test]
    fn grad_deviation_closed_forms() {
        let mesh = fixtures::strip(1.0, 0.5, 3).unwrap();
        let ux = NodalField::from_vec(mesh.vertices().iter().map(|v| v.x).collect());
        assert!(grad_deviation(&mesh, &ux) < 1e-14);
        let zero = NodalField::zeros(mesh.n_vertices());
        assert!((grad_deviation(&mesh, &zero) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn triangle_audit_exact_distances_have_no_violations() {
        let mesh = fixtures::hemisphere(3).unwrap();
        let q1 = 0usize;
        let q2 = mesh.n_vertices() / 2;
        let u1 = oracles::field_on_mesh(&mesh, |v| {
            oracles::sphere_point_distance(v, &mesh.vertex(q1))
        })
        .unwrap();
        let u2 = oracles::field_on_mesh(&mesh, |v| {
            oracles::sphere_point_distance(v, &mesh.vertex(q2))
        })
        .unwrap();
        let audit = triangle_audit(&mesh, &u1, &u2, q1, q2).unwrap();
        assert_eq!(audit.violations, 0, "d12 {} d21 {}", audit.d12, audit.d21);
        assert_eq!(audit.flags.len(), mesh.n_vertices());
        assert_eq!(audit.d12, audit.d21);
    }

    #[test]
    fn triangle_audit_constructed_counterexample() {
        let mesh = fixtures::disc(3).unwrap();
        let q1 = 0usize;
        let q2 = 5usize;
        let mut u1 = NodalField::zeros(mesh.n_vertices());
        let u2 = NodalField::zeros(mesh.n_vertices());
        // force d(q1, q2) positive with otherwise all-zero fields
        u1[q2] = 1.0;
        let audit = triangle_audit(&mesh, &u1, &u2, q1, q2).unwrap();
        // every non-feature vertex violates
        assert_eq!(audit.violations, mesh.n_vertices() - 2);
        assert_eq!(
            audit.violations,
            audit.flags.iter().filter(|&&f| !f).count()
        );
    }
}
