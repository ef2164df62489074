//! ADMM iteration for the surface p-Poisson problem.
//!
//! The energy `(1/p) int |grad u|^p - int u` is minimized subject to
//! `u = 0` on the feature set by splitting with a slack field `xi` tied to
//! `grad u`. Each iteration solves a per-face scalar root problem for
//! `xi`, one linear Poisson problem for `u` (same matrix every iteration,
//! so its factorization is computed once), and a dual ascent for the
//! multiplier field `y`.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::mesh::{BoundaryPartition, TriangleMesh, Vec3};
use crate::sfem::{
    assemble_div_rhs, assemble_load, assemble_stiffness, face_gradient, solve_spd, FaceVectorField,
    NodalField, SfemError, SpdSystem,
};

/// Gradient magnitudes below this are treated as zero in the xi update.
pub const GNORM_CUTOFF: f64 = 1e-14;

/// Exit when the solution stops moving (`|du|_inf` below this) even if the
/// residual tolerances are not yet met; guards against stalls near machine
/// precision on coarse meshes.
pub const STAGNATION_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error(transparent)]
    Sfem(#[from] SfemError),
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error("non-finite iterate at iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("xi root find failed for gnorm={gnorm}, p={p}, beta={beta}")]
    XiRootFailed { gnorm: f64, p: f64, beta: f64 },
}

/// Parameters of the ADMM solve and the optional p-continuation schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Exponent of the p-Laplacian, `p >= 2`.
    pub p: f64,
    /// Penalty / dual step size.
    pub beta: f64,
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub max_iters: usize,
    /// Residual tolerance of the per-face root solve, scaled by `beta`.
    pub newton_tol: f64,
    pub newton_max: usize,
    /// Continuation p values (strictly increasing). `None` doubles from 5
    /// up to `p`.
    pub schedule: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            p: 100.0,
            beta: 10.0,
            tol_primal: 1e-6,
            tol_dual: 1e-3,
            max_iters: 2000,
            newton_tol: 1e-12,
            newton_max: 50,
            schedule: None,
        }
    }
}

impl SolverConfig {
    pub fn with_p(p: f64) -> Self {
        Self {
            p,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        if !(self.p >= 2.0) {
            return Err(SolveError::BadConfig(format!("p = {} must be >= 2", self.p)));
        }
        if !(self.beta > 0.0) {
            return Err(SolveError::BadConfig(format!(
                "beta = {} must be positive",
                self.beta
            )));
        }
        if !(self.tol_primal > 0.0 && self.tol_dual > 0.0 && self.newton_tol > 0.0) {
            return Err(SolveError::BadConfig("tolerances must be positive".into()));
        }
        if let Some(schedule) = &self.schedule {
            if schedule.is_empty() {
                return Err(SolveError::BadConfig("empty continuation schedule".into()));
            }
            if schedule.windows(2).any(|w| w[0] >= w[1]) {
                return Err(SolveError::BadConfig(
                    "continuation schedule must be strictly increasing".into(),
                ));
            }
            if schedule[0] < 2.0 {
                return Err(SolveError::BadConfig(
                    "continuation schedule entries must be >= 2".into(),
                ));
            }
        }
        Ok(())
    }

    /// The continuation schedule actually run: explicit if set, otherwise
    /// doubling from 5 until the target `p`.
    pub fn effective_schedule(&self) -> Vec<f64> {
        match &self.schedule {
            Some(s) => s.clone(),
            None => default_schedule(5.0, self.p),
        }
    }
}

/// Doubling schedule from `start` up to and including `target`.
pub fn default_schedule(start: f64, target: f64) -> Vec<f64> {
    if target <= start {
        return vec![target];
    }
    let mut schedule = vec![start];
    let mut q = start;
    while q * 2.0 < target {
        q *= 2.0;
        schedule.push(q);
    }
    schedule.push(target);
    schedule
}

/// The ADMM iterates: scalar `u` on vertices, slack `xi` and multiplier
/// `y` on faces.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub u: NodalField,
    pub xi: FaceVectorField,
    pub y: FaceVectorField,
    pub iteration: usize,
}

impl AdmmState {
    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.xi.is_finite() && self.y.is_finite()
    }
}

/// Why a solve stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// Both residual norms fell below their tolerances.
    Converged,
    /// The solution stopped changing before the tolerances were met.
    Stagnated,
    MaxIters,
}

/// Per-iteration residual, energy, and solution-change record.
#[derive(Debug, Clone, Copy)]
pub struct IterRecord {
    /// Area-weighted L2 norm of `xi - grad u`.
    pub primal: f64,
    /// Area-weighted L2 norm of `beta (xi - xi_prev)`.
    pub dual: f64,
    pub energy: f64,
    /// `|u - u_prev|_inf`.
    pub du_norm: f64,
}

/// Result of one ADMM solve at a fixed p.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub p: f64,
    pub final_state: AdmmState,
    pub history: Vec<IterRecord>,
    pub termination: Termination,
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn u(&self) -> &NodalField {
        &self.final_state.u
    }

    pub fn iterations(&self) -> usize {
        self.history.len()
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

/// Solves `gnorm^(p-2) c^(p-1) + beta (c - 1) = 0` for `c` in `[0, 1]`.
///
/// Returns `None` when `gnorm` is below [`GNORM_CUTOFF`] (the xi update is
/// then the zero vector). The returned root satisfies
/// `|residual| <= newton_tol * beta`.
///
/// The iteration runs on the logarithmic form
/// `(p-2) ln(gnorm) + (p-1) ln(c) = ln(beta (1-c))`,
/// which neither overflows nor underflows for the large exponents used
/// here; Newton steps that leave the current sign bracket fall back to
/// bisection.
pub fn xi_root(
    gnorm: f64,
    p: f64,
    beta: f64,
    cfg: &SolverConfig,
) -> Result<Option<f64>, SolveError> {
    if !gnorm.is_finite() || gnorm < 0.0 {
        return Err(SolveError::XiRootFailed { gnorm, p, beta });
    }
    if gnorm < GNORM_CUTOFF {
        return Ok(None);
    }
    xi_root_from(gnorm, p, beta, cfg, 0.5).map(Some)
}

fn xi_root_from(
    gnorm: f64,
    p: f64,
    beta: f64,
    cfg: &SolverConfig,
    c_start: f64,
) -> Result<f64, SolveError> {
    let tol = cfg.newton_tol * beta;
    if p == 2.0 {
        // linear case: c + beta (c - 1) = 0
        return Ok(beta / (beta + 1.0));
    }
    let log_coeff = (p - 2.0) * gnorm.ln();
    // Tiny leading coefficient a = gnorm^(p-2): at c = beta / (beta + a)
    // the residual is a c (c^(p-2) - 1), within tolerance already.
    if log_coeff <= tol.ln() {
        return Ok(beta / (beta + log_coeff.exp()));
    }

    let residual = |c: f64| (log_coeff + (p - 1.0) * c.ln()).exp() + beta * (c - 1.0);
    let log_form = |c: f64| log_coeff + (p - 1.0) * c.ln() - (beta * (1.0 - c)).ln();

    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut c = c_start.clamp(1e-12, 1.0 - 1e-12);
    for _ in 0..cfg.newton_max {
        if residual(c).abs() <= tol {
            return Ok(c);
        }
        let value = log_form(c);
        if value > 0.0 {
            hi = c;
        } else {
            lo = c;
        }
        let slope = (p - 1.0) / c + 1.0 / (1.0 - c);
        let mut next = c - value / slope;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        c = next;
    }
    if residual(c).abs() <= tol {
        return Ok(c);
    }
    Err(SolveError::XiRootFailed { gnorm, p, beta })
}

/// The xi minimization: per face, `xi = c * (grad u - y / beta)` with `c`
/// from [`xi_root`]; the result is parallel to its driving vector and no
/// longer than it.
pub fn xi_update(
    state: &AdmmState,
    mesh: &TriangleMesh,
    cfg: &SolverConfig,
) -> Result<FaceVectorField, SolveError> {
    let grad_u = face_gradient(mesh, &state.u);
    let mut c_warm = vec![0.5; mesh.n_faces()];
    xi_step(&grad_u, &state.y, cfg, &mut c_warm)
}

/// Per-face xi minimization given the precomputed gradient of the current
/// iterate. `c_warm` carries the previous root per face as the Newton
/// starting point; the roots move slowly between iterations, which makes
/// this the hot-loop variant.
fn xi_step(
    grad_u: &FaceVectorField,
    y: &FaceVectorField,
    cfg: &SolverConfig,
    c_warm: &mut [f64],
) -> Result<FaceVectorField, SolveError> {
    let inv_beta = 1.0 / cfg.beta;
    let mut xi = Vec::with_capacity(grad_u.len());
    for f in 0..grad_u.len() {
        let g = grad_u[f] - y[f] * inv_beta;
        let gnorm = g.norm();
        if !gnorm.is_finite() {
            return Err(SolveError::XiRootFailed {
                gnorm,
                p: cfg.p,
                beta: cfg.beta,
            });
        }
        if gnorm < GNORM_CUTOFF {
            xi.push(Vec3::zeros());
            continue;
        }
        let c = xi_root_from(gnorm, cfg.p, cfg.beta, cfg, c_warm[f])?;
        c_warm[f] = c;
        xi.push(g * c);
    }
    Ok(FaceVectorField::from_vec(xi))
}

/// The u minimization: a Poisson solve with data `div(xi + y/beta) + 1/beta`
/// imposed weakly, on the pre-constrained system. The solution is exactly
/// zero on the Dirichlet set.
pub fn u_update(
    state: &AdmmState,
    mesh: &TriangleMesh,
    partition: &BoundaryPartition,
    cfg: &SolverConfig,
    system: &SpdSystem,
) -> Result<NodalField, SolveError> {
    let load = assemble_load(mesh);
    let u = u_step(mesh, cfg, system, &load, &state.xi, &state.y)?;
    debug_assert!(partition.gamma1().iter().all(|&v| u[v] == 0.0));
    Ok(u)
}

fn u_step(
    mesh: &TriangleMesh,
    cfg: &SolverConfig,
    system: &SpdSystem,
    load: &NodalField,
    xi: &FaceVectorField,
    y: &FaceVectorField,
) -> Result<NodalField, SolveError> {
    let inv_beta = 1.0 / cfg.beta;
    let w = FaceVectorField::from_vec(
        (0..xi.len()).map(|f| xi[f] + y[f] * inv_beta).collect(),
    );
    let mut rhs = assemble_div_rhs(mesh, &w);
    for i in 0..rhs.len() {
        rhs[i] += inv_beta * load[i];
    }
    system.apply_dirichlet_rhs(&mut rhs);
    let mut u = solve_spd(system, &rhs)?;
    // identity rows already decouple the Dirichlet vertices; pin them to
    // exact zeros regardless
    system.apply_dirichlet_rhs(&mut u);
    Ok(u)
}

/// Dual ascent `y + beta (xi - grad u)` on the current state.
pub fn dual_update(state: &AdmmState, mesh: &TriangleMesh, beta: f64) -> FaceVectorField {
    let grad_u = face_gradient(mesh, &state.u);
    FaceVectorField::from_vec(
        (0..state.y.len())
            .map(|f| state.y[f] + (state.xi[f] - grad_u[f]) * beta)
            .collect(),
    )
}

/// The p-energy `(1/p) int |grad u|^p - int u`, with the gradient term
/// integrated exactly per face and the linear term by nodal quadrature
/// (exact for piecewise-linear `u`). Overflowing face terms produce an
/// infinite energy rather than a panic; `p log |grad u|` is formed in log
/// space.
pub fn energy(mesh: &TriangleMesh, u: &NodalField, p: f64) -> f64 {
    let grads = face_gradient(mesh, u);
    let load = assemble_load(mesh);
    energy_from_parts(mesh, &grads, &load, u, p)
}

fn energy_from_parts(
    mesh: &TriangleMesh,
    grads: &FaceVectorField,
    load: &NodalField,
    u: &NodalField,
    p: f64,
) -> f64 {
    let mut gradient_term = 0.0;
    for f in 0..mesh.n_faces() {
        let g = grads[f].norm();
        if g > 0.0 {
            gradient_term += (p * g.ln() + mesh.face_area(f).ln()).exp();
        }
    }
    gradient_term / p - load.dot(u)
}

/// Assembled, constrained, and factorizable state shared by every solve on
/// one (mesh, partition) pair. Building it once lets a continuation reuse
/// the stiffness factorization across all stages.
pub struct AdmmSolver<'a> {
    mesh: &'a TriangleMesh,
    partition: &'a BoundaryPartition,
    system: SpdSystem,
    load: NodalField,
}

impl<'a> AdmmSolver<'a> {
    pub fn new(mesh: &'a TriangleMesh, partition: &'a BoundaryPartition) -> Result<Self, SolveError> {
        let stiffness = assemble_stiffness(mesh)?;
        let system = stiffness.constrained(partition.gamma1());
        let load = assemble_load(mesh);
        Ok(Self {
            mesh,
            partition,
            system,
            load,
        })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        self.mesh
    }

    pub fn partition(&self) -> &BoundaryPartition {
        self.partition
    }

    pub fn system(&self) -> &SpdSystem {
        &self.system
    }

    /// Cold start: `xi = y = 0` and `u` from the Poisson solve
    /// `-laplace(u) = 1/beta` with the problem's boundary conditions.
    pub fn initial_state(&self, cfg: &SolverConfig) -> Result<AdmmState, SolveError> {
        let n_faces = self.mesh.n_faces();
        let xi = FaceVectorField::zeros(n_faces);
        let y = FaceVectorField::zeros(n_faces);
        let u = u_step(self.mesh, cfg, &self.system, &self.load, &xi, &y)?;
        Ok(AdmmState {
            u,
            xi,
            y,
            iteration: 0,
        })
    }

    /// Runs ADMM at the single p in `cfg` (the schedule is ignored here),
    /// starting from `warm_start` when given.
    pub fn solve(
        &self,
        cfg: &SolverConfig,
        warm_start: Option<AdmmState>,
    ) -> Result<SolveReport, SolveError> {
        cfg.validate()?;
        let t0 = Instant::now();
        let mut state = match warm_start {
            Some(state) => {
                assert_eq!(state.u.len(), self.mesh.n_vertices());
                assert_eq!(state.xi.len(), self.mesh.n_faces());
                state
            }
            None => self.initial_state(cfg)?,
        };
        state.iteration = 0;

        let beta = cfg.beta;
        let mut c_warm = vec![0.5; self.mesh.n_faces()];
        let mut grad_u = face_gradient(self.mesh, &state.u);
        let mut history = Vec::new();
        let mut termination = Termination::MaxIters;

        for k in 1..=cfg.max_iters {
            let xi_new = xi_step(&grad_u, &state.y, cfg, &mut c_warm)?;
            let dual_norm = beta
                * FaceVectorField::from_vec(
                    (0..xi_new.len()).map(|f| xi_new[f] - state.xi[f]).collect(),
                )
                .area_norm(self.mesh);

            let u_new = u_step(self.mesh, cfg, &self.system, &self.load, &xi_new, &state.y)?;
            let grad_new = face_gradient(self.mesh, &u_new);

            let primal_field = FaceVectorField::from_vec(
                (0..xi_new.len()).map(|f| xi_new[f] - grad_new[f]).collect(),
            );
            let primal_norm = primal_field.area_norm(self.mesh);
            for f in 0..state.y.len() {
                state.y[f] += primal_field[f] * beta;
            }

            let du_norm = u_new
                .iter()
                .zip(state.u.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let energy = energy_from_parts(self.mesh, &grad_new, &self.load, &u_new, cfg.p);

            state.u = u_new;
            state.xi = xi_new;
            state.iteration = k;
            grad_u = grad_new;
            history.push(IterRecord {
                primal: primal_norm,
                dual: dual_norm,
                energy,
                du_norm,
            });

            if !(primal_norm.is_finite() && dual_norm.is_finite()) || !state.is_finite() {
                return Err(SolveError::NonFinite { iteration: k });
            }
            if primal_norm < cfg.tol_primal && dual_norm < cfg.tol_dual {
                termination = Termination::Converged;
                break;
            }
            if du_norm < STAGNATION_TOL {
                termination = Termination::Stagnated;
                break;
            }
        }

        Ok(SolveReport {
            p: cfg.p,
            final_state: state,
            history,
            termination,
            wall_time: t0.elapsed(),
        })
    }

    /// Runs the continuation schedule, warm-starting every stage with the
    /// previous stage's full (u, xi, y) state.
    pub fn continuation(&self, cfg: &SolverConfig) -> Result<Vec<SolveReport>, SolveError> {
        cfg.validate()?;
        let schedule = cfg.effective_schedule();
        if schedule.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SolveError::BadConfig(
                "continuation schedule must be strictly increasing".into(),
            ));
        }
        let mut reports = Vec::with_capacity(schedule.len());
        let mut warm: Option<AdmmState> = None;
        for &p in &schedule {
            let stage_cfg = SolverConfig {
                p,
                schedule: None,
                ..cfg.clone()
            };
            let report = self.solve(&stage_cfg, warm.take())?;
            warm = Some(report.final_state.clone());
            reports.push(report);
        }
        Ok(reports)
    }
}

/// One ADMM solve at `cfg.p`; assembles and factors for this call alone.
pub fn admm_solve(
    mesh: &TriangleMesh,
    partition: &BoundaryPartition,
    cfg: &SolverConfig,
    warm_start: Option<AdmmState>,
) -> Result<SolveReport, SolveError> {
    AdmmSolver::new(mesh, partition)?.solve(cfg, warm_start)
}

/// Continuation over `cfg.effective_schedule()`, sharing one assembled and
/// factored system across all stages.
pub fn continuation_solve(
    mesh: &TriangleMesh,
    partition: &BoundaryPartition,
    cfg: &SolverConfig,
) -> Result<Vec<SolveReport>, SolveError> {
    AdmmSolver::new(mesh, partition)?.continuation(cfg)
}
