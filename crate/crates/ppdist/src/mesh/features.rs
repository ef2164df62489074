//! Discrete feature-set selection: the Dirichlet vertex set and the
//! complementary Neumann part of the mesh boundary.

use std::collections::BTreeSet;

use super::{MeshError, TriangleMesh, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn component(self, v: &Vec3) -> f64 {
        match self {
            Axis::X => v.x,
            Axis::Y => v.y,
            Axis::Z => v.z,
        }
    }
}

/// One coordinate constraint of a predicate selector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoordCondition {
    /// `|coord - value| <= tol`
    Band { axis: Axis, value: f64, tol: f64 },
    /// `coord >= value`
    AtLeast { axis: Axis, value: f64 },
    /// `coord <= value`
    AtMost { axis: Axis, value: f64 },
}

impl CoordCondition {
    fn holds(&self, v: &Vec3) -> bool {
        match *self {
            CoordCondition::Band { axis, value, tol } => (axis.component(v) - value).abs() <= tol,
            CoordCondition::AtLeast { axis, value } => axis.component(v) >= value,
            CoordCondition::AtMost { axis, value } => axis.component(v) <= value,
        }
    }
}

/// One way of picking feature vertices; a feature spec is a list of these
/// and selects the union.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSelector {
    /// The single vertex closest to a point (ties broken by lowest index).
    NearestVertex { point: Vec3 },
    /// All vertices satisfying every listed coordinate condition.
    Predicate { conditions: Vec<CoordCondition> },
    /// Every vertex on the mesh boundary.
    AllBoundary,
    /// An explicit vertex-index list.
    Vertices { indices: Vec<usize> },
}

/// Dirichlet feature vertices (`gamma1`) and the remaining boundary
/// vertices (`gamma2`), which receive the natural Neumann condition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryPartition {
    gamma1: BTreeSet<usize>,
    gamma2: BTreeSet<usize>,
}

impl BoundaryPartition {
    /// Builds a partition from an explicit Dirichlet set; `gamma2` is the
    /// mesh boundary minus `gamma1`.
    pub fn new(mesh: &TriangleMesh, gamma1: BTreeSet<usize>) -> Result<Self, MeshError> {
        if gamma1.is_empty() {
            return Err(MeshError::EmptyFeatureSet);
        }
        if let Some(&v) = gamma1.iter().find(|&&v| v >= mesh.n_vertices()) {
            return Err(MeshError::VertexOutOfRange {
                vertex: v,
                n_vertices: mesh.n_vertices(),
            });
        }
        let gamma2 = mesh.boundary_vertices().filter(|v| !gamma1.contains(v)).collect();
        Ok(Self { gamma1, gamma2 })
    }

    pub fn gamma1(&self) -> &BTreeSet<usize> {
        &self.gamma1
    }

    pub fn gamma2(&self) -> &BTreeSet<usize> {
        &self.gamma2
    }

    pub fn is_dirichlet(&self, v: usize) -> bool {
        self.gamma1.contains(&v)
    }
}

/// Result of applying a feature spec; selectors that matched nothing are
/// reported by position so callers can warn about them.
#[derive(Debug, Clone)]
pub struct FeatureSelection {
    pub partition: BoundaryPartition,
    pub empty_selectors: Vec<usize>,
}

/// Applies the selectors and partitions the boundary.
///
/// Fails only when the union of all selections is empty; individual
/// selectors that match nothing are reported in the result.
pub fn select_features(
    mesh: &TriangleMesh,
    selectors: &[FeatureSelector],
) -> Result<FeatureSelection, MeshError> {
    let mut gamma1 = BTreeSet::new();
    let mut empty_selectors = Vec::new();
    for (i, selector) in selectors.iter().enumerate() {
        let before = gamma1.len();
        match selector {
            FeatureSelector::NearestVertex { point } => {
                let mut best = 0usize;
                let mut best_dist = f64::INFINITY;
                for (v, pos) in mesh.vertices().iter().enumerate() {
                    let d = (pos - point).norm_squared();
                    if d < best_dist {
                        best_dist = d;
                        best = v;
                    }
                }
                gamma1.insert(best);
            }
            FeatureSelector::Predicate { conditions } => {
                for (v, pos) in mesh.vertices().iter().enumerate() {
                    if conditions.iter().all(|c| c.holds(pos)) {
                        gamma1.insert(v);
                    }
                }
            }
            FeatureSelector::AllBoundary => {
                gamma1.extend(mesh.boundary_vertices());
            }
            FeatureSelector::Vertices { indices } => {
                for &v in indices {
                    if v >= mesh.n_vertices() {
                        return Err(MeshError::VertexOutOfRange {
                            vertex: v,
                            n_vertices: mesh.n_vertices(),
                        });
                    }
                    gamma1.insert(v);
                }
            }
        }
        if gamma1.len() == before {
            empty_selectors.push(i);
        }
    }
    let partition = BoundaryPartition::new(mesh, gamma1)?;
    Ok(FeatureSelection {
        partition,
        empty_selectors,
    })
}
