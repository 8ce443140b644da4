//! Projected gradient descent on the flow polytope, globally and localized
//! to a subgraph.
//!
//! The feasible set `{x : Ax = b}` is affine, so the Euclidean projection
//! is a fixed linear map plus an offset and the projected-gradient step
//!
//! ```text
//! T_b(x) = proj(x - eta * grad f(x)),     eta = 1 / beta
//! ```
//!
//! contracts toward the optimum at a per-step factor of `1 - 1/Q` where
//! `Q = beta / alpha` is the condition number of the costs - a rate with no
//! dependence on the size of the graph.
//!
//! The localized variant freezes every flow outside a chosen subgraph and
//! runs the same iteration on the free coordinates only. Because frozen
//! coordinates never move, conservation at vertices outside the subgraph is
//! untouched, and the inner problem is again a min-cost flow - on the
//! subgraph, with boundary flows absorbed into its right-hand side.

use nalgebra::DVector;
use thiserror::Error;

use crate::graph::{DirectedGraph, GraphError, IncidenceMatrix, Subgraph};
use crate::sensitivity::{check_balanced, laplacian_pseudoinverse, FlowProblem, SolveError, Solution};

/// Residual tolerance for the frozen-boundary consistency check, relative
/// to the demand scale.
pub const BOUNDARY_TOL: f64 = 1e-9;

/// Errors from projection and projected-gradient iteration.
#[derive(Debug, Error)]
pub enum SolverError {
    /// Step size must be positive and finite.
    #[error("step size {eta} is not a positive finite number")]
    InvalidStepSize {
        /// The offending step size.
        eta: f64,
    },
    /// A vector has the wrong length.
    #[error("dimension mismatch for {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        /// What was being checked.
        what: &'static str,
        /// Expected length.
        expected: usize,
        /// Actual length.
        got: usize,
    },
    /// The frozen flows do not satisfy conservation at vertices outside the
    /// subgraph for the requested demands.
    #[error(
        "frozen boundary flows violate conservation outside the subgraph \
         (residual {residual:e}); the demand change must be supported on \
         the subgraph's vertices"
    )]
    BoundaryInconsistent {
        /// Norm of the conservation violation on outside vertices.
        residual: f64,
    },
    /// The perturbation touches vertices outside the subgraph.
    #[error("perturbation has support at vertex {vertex}, outside the subgraph")]
    SupportOutsideSubgraph {
        /// A vertex outside the subgraph carrying nonzero perturbation.
        vertex: usize,
    },
    /// The subgraph has no edges, so no reduced problem exists on it.
    #[error("subgraph has no edges; nothing to re-solve")]
    EmptySubgraph,
    /// Forwarded flow-problem error (balance, kernel dimension, ...).
    #[error(transparent)]
    Solve(#[from] SolveError),
    /// Forwarded graph error.
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Options for the projected-gradient iteration.
#[derive(Debug, Clone, Copy, Default)]
pub struct PgdConfig {
    /// Step size; defaults to `1 / beta` for the problem at hand.
    pub eta: Option<f64>,
}

impl PgdConfig {
    /// Resolves the step size against a problem's smoothness constant.
    pub fn step_size(&self, problem: &FlowProblem) -> Result<f64, SolverError> {
        let eta = self.eta.unwrap_or_else(|| {
            let (_, beta) = problem.curvature_bounds();
            1.0 / beta
        });
        if !(eta.is_finite() && eta > 0.0) {
            return Err(SolverError::InvalidStepSize { eta });
        }
        Ok(eta)
    }
}

/// The Euclidean projection onto `{x : Ax = b}`, with the expensive parts
/// (`Aᵀ(AAᵀ)⁺` and the kernel projector) computed once and reused across
/// right-hand sides and iterations.
#[derive(Debug, Clone)]
pub struct AffineProjector {
    /// `Aᵀ (A Aᵀ)⁺`, mapping demands to the minimum-norm feasible flow.
    min_norm: nalgebra::DMatrix<f64>,
    /// `I - Aᵀ(AAᵀ)⁺A`, the orthogonal projector onto `ker A`.
    kernel: nalgebra::DMatrix<f64>,
    n_vertices: usize,
    n_edges: usize,
}

impl AffineProjector {
    /// Builds the projector for an incidence matrix. `A Aᵀ` is the
    /// unweighted graph Laplacian, so its pseudoinverse goes through the
    /// same verified rank-one-shift route as the sensitivity machinery.
    pub fn new(a: &IncidenceMatrix) -> Result<Self, SolverError> {
        let gram = a.matrix() * a.matrix().transpose();
        let gram_pinv = laplacian_pseudoinverse(&gram)?;
        let min_norm = a.matrix().transpose() * gram_pinv;
        let kernel = nalgebra::DMatrix::identity(a.n_edges(), a.n_edges())
            - &min_norm * a.matrix();
        Ok(AffineProjector {
            min_norm,
            kernel,
            n_vertices: a.n_vertices(),
            n_edges: a.n_edges(),
        })
    }

    /// Projects `x` onto `{u : Au = b}`: kernel component of `x` plus the
    /// minimum-norm solution for `b`. Requires balanced `b`.
    pub fn project(
        &self,
        b: &DVector<f64>,
        x: &DVector<f64>,
    ) -> Result<DVector<f64>, SolverError> {
        if b.len() != self.n_vertices {
            return Err(SolverError::DimensionMismatch {
                what: "demand vector",
                expected: self.n_vertices,
                got: b.len(),
            });
        }
        if x.len() != self.n_edges {
            return Err(SolverError::DimensionMismatch {
                what: "flow vector",
                expected: self.n_edges,
                got: x.len(),
            });
        }
        check_balanced(b)?;
        Ok(&self.kernel * x + &self.min_norm * b)
    }

    /// The minimum-norm feasible flow for `b` (projection of the origin).
    pub fn min_norm_flow(&self, b: &DVector<f64>) -> Result<DVector<f64>, SolverError> {
        self.project(b, &DVector::zeros(self.n_edges))
    }
}

/// One-shot Euclidean projection of `x` onto `{u : Au = b}`.
///
/// Builds the projector and discards it; prefer [`AffineProjector`] when
/// projecting repeatedly against the same incidence structure.
pub fn project_affine(
    a: &IncidenceMatrix,
    b: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<DVector<f64>, SolverError> {
    AffineProjector::new(a)?.project(b, x)
}

/// One projected-gradient step `proj(x - eta * grad f(x))` on the full
/// problem.
pub fn pgd_step(
    problem: &FlowProblem,
    config: &PgdConfig,
    projector: &AffineProjector,
    x: &DVector<f64>,
) -> Result<DVector<f64>, SolverError> {
    let eta = config.step_size(problem)?;
    let stepped = x - eta * problem.gradient(x);
    projector.project(problem.b(), &stepped)
}

/// Runs projected gradient descent until successive iterates move less
/// than `tol` (or `max_iters` steps), starting from the minimum-norm
/// feasible flow. Returns the same solution shape as the Newton solver,
/// with duals recovered by least squares.
pub fn pgd_solve(
    problem: &FlowProblem,
    config: &PgdConfig,
    tol: f64,
    max_iters: usize,
) -> Result<Solution, SolverError> {
    let projector = AffineProjector::new(problem.incidence())?;
    let mut x = projector.min_norm_flow(problem.b())?;
    let mut iterations = 0;
    for _ in 0..max_iters {
        let next = pgd_step(problem, config, &projector, &x)?;
        iterations += 1;
        let moved = (&next - &x).norm();
        x = next;
        if moved <= tol {
            break;
        }
    }
    // Stationarity on the affine set means grad f = -Aᵀ nu for some nu;
    // recover the best nu by least squares and center it.
    let grad = problem.gradient(&x);
    let mut dual = -(&projector.min_norm).transpose() * &grad;
    let mean = dual.mean();
    dual.add_scalar_mut(-mean);
    let residual = (problem.incidence().apply(&x) - problem.b()).norm();
    let stationarity = (&grad + problem.incidence().apply_transpose(&dual)).norm();
    Ok(Solution {
        x,
        dual,
        residual,
        stationarity,
        iterations,
    })
}

/// The localized projected-gradient map for one (problem, subgraph, demand)
/// triple: flows outside the subgraph are frozen, and the step acts on the
/// subgraph's edges only, projecting onto conservation at the subgraph's
/// vertices with boundary flows folded into the right-hand side.
///
/// Building the map costs one subgraph-sized pseudoinverse; each step is a
/// gradient evaluation plus two small matrix-vector products.
#[derive(Debug, Clone)]
pub struct LocalizedMap {
    /// Edge ids (in the parent graph) that the map updates.
    free_edges: Vec<usize>,
    /// Vertex ids (in the parent graph) of the subgraph.
    vertices: Vec<usize>,
    /// Projector onto the subgraph's conservation constraints.
    projector: AffineProjector,
    /// Localized right-hand side: demands on subgraph vertices minus the
    /// flow carried in and out by frozen boundary edges.
    b_local: DVector<f64>,
    /// Resolved step size.
    eta: f64,
}

impl LocalizedMap {
    /// Builds the localized map. `x_frozen` supplies the flows that stay
    /// fixed outside the subgraph (only those coordinates are read); the
    /// demands `b_new` must agree with the frozen flows at every vertex
    /// outside the subgraph, which is checked explicitly.
    pub fn new(
        problem: &FlowProblem,
        sub: &Subgraph<'_>,
        b_new: &DVector<f64>,
        x_frozen: &DVector<f64>,
        config: &PgdConfig,
    ) -> Result<Self, SolverError> {
        let n = problem.graph().n_vertices();
        let m = problem.graph().n_edges();
        if b_new.len() != n {
            return Err(SolverError::DimensionMismatch {
                what: "demand vector",
                expected: n,
                got: b_new.len(),
            });
        }
        if x_frozen.len() != m {
            return Err(SolverError::DimensionMismatch {
                what: "flow vector",
                expected: m,
                got: x_frozen.len(),
            });
        }
        check_balanced(b_new)?;
        let eta = config.step_size(problem)?;

        // Conservation from the frozen flows alone: edges inside the
        // subgraph touch no outside vertex, so (Ax)_v for outside v is
        // determined by frozen coordinates and must already match b_new.
        let mut frozen_padded = x_frozen.clone();
        for &e in sub.edges() {
            frozen_padded[e] = 0.0;
        }
        let frozen_flux = problem.incidence().apply(&frozen_padded);
        let mut boundary_residual_sq = 0.0;
        for v in sub.complement_vertices() {
            let r = frozen_flux[v] - b_new[v];
            boundary_residual_sq += r * r;
        }
        let boundary_residual = boundary_residual_sq.sqrt();
        if boundary_residual > BOUNDARY_TOL * (1.0 + b_new.norm()) {
            return Err(SolverError::BoundaryInconsistent {
                residual: boundary_residual,
            });
        }

        // Localized demands: what the free edges must deliver at each
        // subgraph vertex after the frozen edges have had their say.
        let vertices = sub.vertices().to_vec();
        let b_local = DVector::from_iterator(
            vertices.len(),
            vertices.iter().map(|&v| b_new[v] - frozen_flux[v]),
        );

        let projector = AffineProjector::new(&sub.incidence_matrix())?;
        Ok(LocalizedMap {
            free_edges: sub.edges().to_vec(),
            vertices,
            projector,
            b_local,
            eta,
        })
    }

    /// Edge ids the map leaves untouched.
    pub fn frozen_edges(&self, n_edges: usize) -> Vec<usize> {
        let mut frozen = Vec::with_capacity(n_edges - self.free_edges.len());
        let mut it = self.free_edges.iter().peekable();
        for e in 0..n_edges {
            if it.peek() == Some(&&e) {
                it.next();
            } else {
                frozen.push(e);
            }
        }
        frozen
    }

    /// The subgraph vertices the localized demands refer to.
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    /// The localized right-hand side (always balanced).
    pub fn b_local(&self) -> &DVector<f64> {
        &self.b_local
    }

    /// Applies one localized projected-gradient step to a full-length flow
    /// vector. Frozen coordinates are copied through bit for bit.
    pub fn step(
        &self,
        problem: &FlowProblem,
        x: &DVector<f64>,
    ) -> Result<DVector<f64>, SolverError> {
        let m = problem.graph().n_edges();
        if x.len() != m {
            return Err(SolverError::DimensionMismatch {
                what: "flow vector",
                expected: m,
                got: x.len(),
            });
        }
        if self.free_edges.is_empty() {
            return Ok(x.clone());
        }
        let costs = problem.costs();
        let local_stepped = DVector::from_iterator(
            self.free_edges.len(),
            self.free_edges
                .iter()
                .map(|&e| x[e] - self.eta * costs[e].gradient(x[e])),
        );
        let projected = self.projector.project(&self.b_local, &local_stepped)?;
        let mut next = x.clone();
        for (i, &e) in self.free_edges.iter().enumerate() {
            next[e] = projected[i];
        }
        Ok(next)
    }
}

/// The flow problem a localized map converges to: the subgraph relabeled
/// as a standalone graph, its own costs, and the localized demands.
///
/// Solving this reduced problem exactly gives the limit of the localized
/// iteration by an independent route, which is how the localization error
/// gets split into bias and optimization terms.
pub fn reduced_problem(
    problem: &FlowProblem,
    sub: &Subgraph<'_>,
    b_local: &DVector<f64>,
) -> Result<FlowProblem, SolverError> {
    if sub.edges().is_empty() {
        return Err(SolverError::EmptySubgraph);
    }
    let verts = sub.vertices();
    let parent_edges = sub.parent().edges();
    let relabeled: Vec<(usize, usize)> = sub
        .edges()
        .iter()
        .map(|&e| {
            let edge = parent_edges[e];
            (
                verts.binary_search(&edge.tail).unwrap(),
                verts.binary_search(&edge.head).unwrap(),
            )
        })
        .collect();
    let graph = DirectedGraph::new(verts.len(), relabeled)?;
    let costs: Vec<_> = sub
        .edges()
        .iter()
        .map(|&e| problem.costs()[e].clone())
        .collect();
    Ok(FlowProblem::new(graph, costs, b_local.clone())?)
}

/// The outcome of a localized re-solve.
#[derive(Debug, Clone)]
pub struct LocalSolveResult {
    /// The flow after `t` localized steps.
    pub x: DVector<f64>,
    /// Norm of the change made by each step, in order.
    pub trace: Vec<f64>,
    /// Edge ids that were held fixed.
    pub frozen_edges: Vec<usize>,
}

/// Re-solves after a demand perturbation by running `t` localized
/// projected-gradient steps inside `sub`, starting from the previous
/// optimum `x_star` and freezing every flow outside the subgraph.
///
/// The perturbation must be balanced and supported on the subgraph's
/// vertices (checked exactly: any nonzero entry outside is an error).
pub fn local_resolve(
    problem: &FlowProblem,
    x_star: &DVector<f64>,
    perturbation: &DVector<f64>,
    sub: &Subgraph<'_>,
    t: usize,
    config: &PgdConfig,
) -> Result<LocalSolveResult, SolverError> {
    let n = problem.graph().n_vertices();
    if perturbation.len() != n {
        return Err(SolverError::DimensionMismatch {
            what: "perturbation",
            expected: n,
            got: perturbation.len(),
        });
    }
    check_balanced(perturbation)?;
    for v in 0..n {
        if perturbation[v] != 0.0 && !sub.contains_vertex(v) {
            return Err(SolverError::SupportOutsideSubgraph { vertex: v });
        }
    }
    let b_new = problem.b() + perturbation;
    let map = LocalizedMap::new(problem, sub, &b_new, x_star, config)?;
    let mut x = x_star.clone();
    let mut trace = Vec::with_capacity(t);
    for _ in 0..t {
        let next = map.step(problem, &x)?;
        trace.push((&next - &x).norm());
        x = next;
    }
    Ok(LocalSolveResult {
        x,
        trace,
        frozen_edges: map.frozen_edges(problem.graph().n_edges()),
    })
}
