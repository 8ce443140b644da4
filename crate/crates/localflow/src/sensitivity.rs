//! Flow problems, their exact optimizers, and the sensitivity operator
//! `S(b)` that maps a change of external flow to the change of the optimum.
//!
//! The problem is `min_x sum_e f_e(x_e)` subject to `A x = b`, with `A` the
//! incidence matrix of a connected graph and each `f_e` strictly convex.
//! Differentiating the KKT system at the optimizer `x*(b)` gives
//!
//! ```text
//! d x*(b(eps)) / d eps = Sigma Aᵀ (A Sigma Aᵀ)⁺ db/deps =: S(b) db/deps
//! ```
//!
//! where `Sigma = diag(1 / f_e''(x*_e))` are the inverse-Hessian weights.
//! The gram matrix `A Sigma Aᵀ` is exactly the Laplacian of the graph
//! weighted by `Sigma`, which is what lets the spectral machinery in
//! [`crate::spectral`] read sensitivity through random-walk glasses.
//!
//! Solving is done in the dual: `x(nu)` inverts each edge gradient at
//! `-(Aᵀ nu)_e`, and Newton's method drives the balance residual
//! `A x(nu) - b` to zero. The Newton Jacobian is the weighted Laplacian
//! again, so every linear solve in this module is a Laplacian solve.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::costs::{CostError, CostModel};
use crate::graph::{DirectedGraph, GraphError, IncidenceMatrix};

/// Relative tolerance for flow-balance checks (`|sum b| <= BALANCE_TOL * ||b||`).
pub const BALANCE_TOL: f64 = 1e-12;

/// Default KKT residual tolerance for [`solve_exact`].
pub const DEFAULT_SOLVE_TOL: f64 = 1e-11;

/// Maximum Newton iterations before [`solve_exact`] reports failure.
const MAX_NEWTON_ITERS: usize = 100;

/// Node budget for the adaptive quadrature in [`finite_perturbation`].
const QUADRATURE_NODE_BUDGET: usize = 1 << 10;

/// Errors from solving and differentiating flow problems.
#[derive(Debug, Error)]
pub enum SolveError {
    /// External flow does not sum to zero (no feasible flow exists).
    #[error("external flow is unbalanced: sum = {sum:e}, allowed {allowed:e}")]
    Unbalanced {
        /// Actual sum of the entries.
        sum: f64,
        /// Largest allowed |sum| for this vector's norm.
        allowed: f64,
    },
    /// Mismatched dimensions between graph, costs, and vectors.
    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        /// Which input is mismatched.
        what: &'static str,
        /// Expected length.
        expected: usize,
        /// Actual length.
        got: usize,
    },
    /// A perturbation direction with nonzero total is outside the range of
    /// the constraint matrix; the optimizer derivative is undefined along it.
    #[error("direction is not balanced (sum = {sum:e}); not in the range of A")]
    DirectionNotBalanced {
        /// Sum of the direction entries.
        sum: f64,
    },
    /// Newton failed to reach the residual tolerance.
    #[error("Newton stalled after {iterations} iterations (residual {residual:e})")]
    NewtonStalled {
        /// Final residual norm.
        residual: f64,
        /// Iterations performed.
        iterations: usize,
    },
    /// The Laplacian kernel is not one-dimensional (disconnected or
    /// numerically degenerate input).
    #[error("Laplacian kernel dimension is {dim}, expected 1")]
    KernelDimension {
        /// Number of numerically zero eigenvalues found.
        dim: usize,
    },
    /// The computed pseudoinverse failed its Moore-Penrose verification.
    #[error("pseudoinverse verification failed (residual {residual:e})")]
    PseudoinverseVerification {
        /// Relative residual of the worst identity.
        residual: f64,
    },
    /// The internal Laplacian identity `A Sigma Aᵀ = Deg - W` drifted.
    #[error("weighted Laplacian assembly mismatch (residual {residual:e})")]
    LaplacianMismatch {
        /// Max absolute entry difference.
        residual: f64,
    },
    /// The adaptive quadrature exhausted its node budget.
    #[error("quadrature budget exhausted (error estimate {estimate:e}, tolerance {tol:e})")]
    QuadratureBudget {
        /// Last Richardson error estimate.
        estimate: f64,
        /// Requested tolerance.
        tol: f64,
    },
    /// Cost model failure.
    #[error(transparent)]
    Cost(#[from] CostError),
    /// Graph failure.
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Checks that a vector sums to zero within [`BALANCE_TOL`] relative to its
/// norm.
pub fn check_balanced(v: &DVector<f64>) -> Result<(), SolveError> {
    let sum: f64 = v.iter().sum();
    let allowed = BALANCE_TOL * v.norm();
    if sum.abs() > allowed {
        return Err(SolveError::Unbalanced { sum, allowed });
    }
    Ok(())
}

/// A strictly convex min-cost flow problem on a connected graph.
#[derive(Debug, Clone)]
pub struct FlowProblem {
    graph: DirectedGraph,
    costs: Vec<CostModel>,
    b: DVector<f64>,
    incidence: IncidenceMatrix,
}

impl FlowProblem {
    /// Builds a problem, checking dimensions and flow balance.
    pub fn new(
        graph: DirectedGraph,
        costs: Vec<CostModel>,
        b: DVector<f64>,
    ) -> Result<Self, SolveError> {
        if costs.len() != graph.n_edges() {
            return Err(SolveError::DimensionMismatch {
                what: "edge costs",
                expected: graph.n_edges(),
                got: costs.len(),
            });
        }
        if b.len() != graph.n_vertices() {
            return Err(SolveError::DimensionMismatch {
                what: "external flow",
                expected: graph.n_vertices(),
                got: b.len(),
            });
        }
        check_balanced(&b)?;
        let incidence = graph.incidence_matrix();
        Ok(FlowProblem {
            graph,
            costs,
            b,
            incidence,
        })
    }

    /// The underlying graph.
    pub fn graph(&self) -> &DirectedGraph {
        &self.graph
    }

    /// Edge costs, indexed by edge id.
    pub fn costs(&self) -> &[CostModel] {
        &self.costs
    }

    /// External flow vector.
    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    /// The cached incidence matrix.
    pub fn incidence(&self) -> &IncidenceMatrix {
        &self.incidence
    }

    /// The same problem with a different external flow.
    pub fn with_external_flow(&self, b: DVector<f64>) -> Result<Self, SolveError> {
        FlowProblem::new(self.graph.clone(), self.costs.clone(), b)
    }

    /// Total cost of an edge flow.
    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        x.iter()
            .zip(&self.costs)
            .map(|(&xe, f)| f.eval(xe).0)
            .sum()
    }

    /// Per-edge cost gradient at `x`.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            x.len(),
            x.iter().zip(&self.costs).map(|(&xe, f)| f.gradient(xe)),
        )
    }

    /// Global curvature sandwich `(alpha, beta)` over all edges.
    pub fn curvature_bounds(&self) -> (f64, f64) {
        crate::costs::curvature_bounds(&self.costs).expect("problems have at least one edge")
    }

    /// Global condition number `Q = beta / alpha`.
    pub fn condition_number(&self) -> f64 {
        let (alpha, beta) = self.curvature_bounds();
        beta / alpha
    }
}

/// An optimizer of a flow problem together with its certificate.
#[derive(Debug, Clone)]
pub struct Solution {
    /// Optimal edge flow.
    pub x: DVector<f64>,
    /// Dual potentials (KKT multipliers), centered so they sum to zero.
    pub dual: DVector<f64>,
    /// Balance residual `||A x - b||`.
    pub residual: f64,
    /// Stationarity residual `||grad f(x) + Aᵀ dual||`.
    pub stationarity: f64,
    /// Newton iterations used.
    pub iterations: usize,
}

/// Weighted-Laplacian assembly: `Sigma`, `W`, degrees, `L`, `L⁺`, and the
/// sensitivity operator `S = Sigma Aᵀ L⁺` evaluated at one optimizer.
#[derive(Debug, Clone)]
pub struct SensitivityOperator {
    /// Inverse-Hessian edge weights `sigma_e = 1 / f_e''(x*_e)`.
    pub sigma: DVector<f64>,
    /// Weighted adjacency: `W[u, v] = sigma_e` for the edge joining `u, v`.
    pub weights: DMatrix<f64>,
    /// Weighted degrees (row sums of `W`).
    pub degrees: DVector<f64>,
    /// Weighted Laplacian `L = Deg - W = A Sigma Aᵀ`.
    pub laplacian: DMatrix<f64>,
    /// Moore-Penrose pseudoinverse `L⁺`.
    pub laplacian_pinv: DMatrix<f64>,
    /// The sensitivity operator `S = Sigma Aᵀ L⁺` (edges by vertices).
    pub s: DMatrix<f64>,
}

impl SensitivityOperator {
    /// Applies `S` to a balanced direction, `d x*/d eps = S db/deps`.
    pub fn apply(&self, dbdeps: &DVector<f64>) -> DVector<f64> {
        &self.s * dbdeps
    }
}

/// Assembles the weighted Laplacian pieces at the flows `x`.
fn weighted_parts(
    p: &FlowProblem,
    x: &DVector<f64>,
) -> (DVector<f64>, DMatrix<f64>, DVector<f64>, DMatrix<f64>) {
    let n = p.graph().n_vertices();
    let m = p.graph().n_edges();
    let sigma = DVector::from_iterator(
        m,
        x.iter()
            .zip(p.costs())
            .map(|(&xe, f)| 1.0 / f.curvature(xe)),
    );
    let mut w = DMatrix::zeros(n, n);
    for (e, edge) in p.graph().edges().iter().enumerate() {
        w[(edge.tail, edge.head)] = sigma[e];
        w[(edge.head, edge.tail)] = sigma[e];
    }
    let degrees = DVector::from_iterator(n, w.row_iter().map(|r| r.sum()));
    let mut lap = -w.clone();
    for v in 0..n {
        lap[(v, v)] = degrees[v];
    }
    (sigma, w, degrees, lap)
}

/// Solves the flow problem exactly via damped Newton on the dual balance
/// residual.
///
/// Each iterate inverts the edge gradients at the current potentials
/// (`x(nu)_e = (f_e')⁻¹(-(Aᵀ nu)_e)`), so stationarity holds by construction
/// and only the balance residual `A x(nu) - b` is driven to `tol`. The
/// Newton system matrix is the weighted Laplacian at `x(nu)`.
pub fn solve_exact(p: &FlowProblem, tol: f64) -> Result<Solution, SolveError> {
    let n = p.graph().n_vertices();
    let a = p.incidence();
    let mut nu = DVector::zeros(n);

    let x_at = |nu: &DVector<f64>| -> Result<DVector<f64>, SolveError> {
        let y = a.apply_transpose(nu);
        let mut x = DVector::zeros(p.graph().n_edges());
        for (e, f) in p.costs().iter().enumerate() {
            x[e] = f.inverse_gradient(-y[e])?;
        }
        Ok(x)
    };

    let mut x = x_at(&nu)?;
    let mut g = a.apply(&x) - p.b();
    let mut iterations = 0;
    while g.norm() > tol {
        if iterations >= MAX_NEWTON_ITERS {
            return Err(SolveError::NewtonStalled {
                residual: g.norm(),
                iterations,
            });
        }
        let (_, _, _, lap) = weighted_parts(p, &x);
        let delta = laplacian_solve(&lap, &g)?;
        // Backtrack on the residual norm; the full step is accepted on
        // quadratic problems (Newton is exact there).
        let mut step = 1.0;
        let (mut nu_next, mut x_next, mut g_next);
        loop {
            nu_next = &nu + step * &delta;
            let mean = nu_next.mean();
            nu_next.add_scalar_mut(-mean);
            x_next = x_at(&nu_next)?;
            g_next = a.apply(&x_next) - p.b();
            if g_next.norm() <= (1.0 - 0.25 * step) * g.norm() || step < 1e-8 {
                break;
            }
            step *= 0.5;
        }
        if g_next.norm() >= g.norm() {
            return Err(SolveError::NewtonStalled {
                residual: g.norm(),
                iterations,
            });
        }
        nu = nu_next;
        x = x_next;
        g = g_next;
        iterations += 1;
    }

    let stationarity = (p.gradient(&x) + a.apply_transpose(&nu)).norm();
    Ok(Solution {
        x,
        dual: nu,
        residual: g.norm(),
        stationarity,
        iterations,
    })
}

/// Builds the sensitivity operator `S(b)` at a solved optimizer.
///
/// Verifies the Laplacian identity `A Sigma Aᵀ = Deg - W` to `1e-12` as an
/// internal consistency check before inverting.
pub fn sensitivity_operator(
    p: &FlowProblem,
    sol: &Solution,
) -> Result<SensitivityOperator, SolveError> {
    let (sigma, weights, degrees, laplacian) = weighted_parts(p, &sol.x);
    let a = p.incidence().matrix();
    let gram = a * DMatrix::from_diagonal(&sigma) * a.transpose();
    let residual = (&gram - &laplacian).amax();
    if residual > 1e-12 * laplacian.amax().max(1.0) {
        return Err(SolveError::LaplacianMismatch { residual });
    }
    let laplacian_pinv = laplacian_pseudoinverse(&laplacian)?;
    let s = DMatrix::from_diagonal(&sigma) * a.transpose() * &laplacian_pinv;
    Ok(SensitivityOperator {
        sigma,
        weights,
        degrees,
        laplacian,
        laplacian_pinv,
        s,
    })
}

/// Directional derivative of the optimizer along a balanced direction:
/// `S(b) * dbdeps`. Errors if the direction is not balanced (such a
/// direction leaves the range of `A`, where the optimizer is undefined).
pub fn directional_derivative(
    op: &SensitivityOperator,
    dbdeps: &DVector<f64>,
) -> Result<DVector<f64>, SolveError> {
    let sum: f64 = dbdeps.iter().sum();
    if sum.abs() > BALANCE_TOL * dbdeps.norm() {
        return Err(SolveError::DirectionNotBalanced { sum });
    }
    Ok(op.apply(dbdeps))
}

/// Moore-Penrose pseudoinverse of a connected-graph Laplacian.
///
/// Uses the rank-one shift identity `L⁺ = (L + J/n)⁻¹ - J/n`, valid exactly
/// when the kernel of the symmetric PSD matrix `L` is spanned by the
/// all-ones vector. The result is verified against the Moore-Penrose
/// identities to `1e-10`; on any doubt (shift not positive definite, or
/// verification residual too large) it falls back to a symmetric
/// eigendecomposition, which also diagnoses kernels of the wrong dimension.
pub fn laplacian_pseudoinverse(l: &DMatrix<f64>) -> Result<DMatrix<f64>, SolveError> {
    let n = l.nrows();
    let jn = DMatrix::from_element(n, n, 1.0 / n as f64);
    if let Some(chol) = (l + &jn).cholesky() {
        let pinv = chol.inverse() - &jn;
        if pinv_verifies(l, &pinv, 1e-10) {
            return Ok(pinv);
        }
    }
    eigen_pseudoinverse(l)
}

/// Checks the Moore-Penrose identities `L L⁺ L = L` and `L⁺ L L⁺ = L⁺`
/// (symmetry of the products is automatic here) to a relative tolerance.
fn pinv_verifies(l: &DMatrix<f64>, pinv: &DMatrix<f64>, tol: f64) -> bool {
    let lp = l * pinv;
    let r1 = (&lp * l - l).amax();
    let r2 = (pinv * &lp - pinv).amax();
    r1 <= tol * l.amax().max(1.0) && r2 <= tol * pinv.amax().max(1.0)
}

/// Eigendecomposition fallback for [`laplacian_pseudoinverse`].
fn eigen_pseudoinverse(l: &DMatrix<f64>) -> Result<DMatrix<f64>, SolveError> {
    let eig = l.clone().symmetric_eigen();
    let max = eig.eigenvalues.amax().max(1e-300);
    let threshold = 1e-10 * max;
    let kernel_dim = eig
        .eigenvalues
        .iter()
        .filter(|v| v.abs() <= threshold)
        .count();
    if kernel_dim != 1 {
        return Err(SolveError::KernelDimension { dim: kernel_dim });
    }
    let inv_vals = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues
            .iter()
            .map(|&v| if v.abs() <= threshold { 0.0 } else { 1.0 / v }),
    );
    let pinv =
        &eig.eigenvectors * DMatrix::from_diagonal(&inv_vals) * eig.eigenvectors.transpose();
    if !pinv_verifies(l, &pinv, 1e-8) {
        return Err(SolveError::PseudoinverseVerification {
            residual: (l * &pinv * l - l).amax() / l.amax().max(1.0),
        });
    }
    Ok(pinv)
}

/// Solves `L x = rhs` on the subspace orthogonal to the all-ones vector via
/// the same rank-one shift used by [`laplacian_pseudoinverse`], without
/// forming the full inverse.
pub fn laplacian_solve(l: &DMatrix<f64>, rhs: &DVector<f64>) -> Result<DVector<f64>, SolveError> {
    let n = l.nrows();
    let jn = DMatrix::from_element(n, n, 1.0 / n as f64);
    match (l + &jn).cholesky() {
        Some(chol) => {
            let mut x = rhs.clone();
            chol.solve_mut(&mut x);
            // For rhs ⊥ 1 the shift contributes nothing; strip the mean so
            // roundoff cannot accumulate a kernel component.
            let mean = x.mean();
            x.add_scalar_mut(-mean);
            Ok(x)
        }
        None => {
            let pinv = eigen_pseudoinverse(l)?;
            Ok(&pinv * rhs)
        }
    }
}

/// Result of integrating the sensitivity operator along a perturbation
/// segment.
#[derive(Debug, Clone)]
pub struct PerturbationIntegral {
    /// The integrated optimizer change `x*(b + p) - x*(b)`.
    pub delta: DVector<f64>,
    /// Quadrature nodes evaluated.
    pub nodes: usize,
    /// Richardson error estimate from the last refinement.
    pub error_estimate: f64,
}

/// Integrates `S(b + eps p) p` over `eps in [0, 1]`, which by the
/// fundamental theorem of calculus equals the exact optimizer change
/// `x*(b + p) - x*(b)`.
///
/// Composite 5-point Gauss-Legendre with panel doubling; the difference
/// between consecutive refinements is the error estimate. For quadratic
/// costs the integrand is constant and the first comparison already agrees.
pub fn finite_perturbation(
    p: &FlowProblem,
    pert: &DVector<f64>,
    quad_tol: f64,
) -> Result<PerturbationIntegral, SolveError> {
    check_balanced(pert)?;
    if pert.len() != p.graph().n_vertices() {
        return Err(SolveError::DimensionMismatch {
            what: "perturbation",
            expected: p.graph().n_vertices(),
            got: pert.len(),
        });
    }

    // 5-point Gauss-Legendre nodes and weights on [-1, 1].
    const GL_NODES: [f64; 5] = [
        -0.906179845938664,
        -0.5384693101056831,
        0.0,
        0.5384693101056831,
        0.906179845938664,
    ];
    const GL_WEIGHTS: [f64; 5] = [
        0.23692688505618908,
        0.47862867049936647,
        0.5688888888888889,
        0.47862867049936647,
        0.23692688505618908,
    ];

    let integrand = |eps: f64| -> Result<DVector<f64>, SolveError> {
        let b_eps = p.b() + eps * pert;
        let p_eps = p.with_external_flow(b_eps)?;
        let sol = solve_exact(&p_eps, DEFAULT_SOLVE_TOL)?;
        let op = sensitivity_operator(&p_eps, &sol)?;
        Ok(op.apply(pert))
    };

    let composite = |panels: usize| -> Result<DVector<f64>, SolveError> {
        let mut acc = DVector::zeros(p.graph().n_edges());
        let width = 1.0 / panels as f64;
        for k in 0..panels {
            let mid = (k as f64 + 0.5) * width;
            for (node, weight) in GL_NODES.iter().zip(GL_WEIGHTS.iter()) {
                acc += integrand(mid + 0.5 * width * node)? * (0.5 * width * weight);
            }
        }
        Ok(acc)
    };

    let mut panels = 1;
    let mut nodes = 5 * panels;
    let mut coarse = composite(panels)?;
    loop {
        let next_nodes = nodes + 5 * panels * 2;
        if next_nodes > QUADRATURE_NODE_BUDGET {
            return Err(SolveError::QuadratureBudget {
                estimate: f64::NAN,
                tol: quad_tol,
            });
        }
        panels *= 2;
        nodes = next_nodes;
        let fine = composite(panels)?;
        let estimate = (&fine - &coarse).norm();
        if estimate <= quad_tol {
            return Ok(PerturbationIntegral {
                delta: fine,
                nodes,
                error_estimate: estimate,
            });
        }
        coarse = fine;
    }
}
