//! Error decomposition and tuning for localized re-solves.
//!
//! Re-solving only inside a subgraph makes two separable errors. The
//! *bias* is the gap between the true new optimum and the localized map's
//! own fixed point; it is paid once for freezing the outside and shrinks
//! geometrically in the hop distance between the subgraph's frozen
//! boundary and the perturbation's support. The *variance* is the
//! optimization error of stopping after `t` steps; it shrinks
//! geometrically in `t` at the conditioning rate `e^(-t/(2Q))`.
//!
//! Both rates are controlled by quantities that do not grow with the
//! graph: the curvature ratio `Q`, degree bounds, and the extreme
//! adjacency eigenvalues. [`tune`] inverts the two bounds to pick the
//! smallest ball radius and iteration count meeting a target accuracy -
//! the resulting `(r, t)` depend on the target and the local structure
//! constants but not on the number of vertices.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{GraphError, Subgraph};
use crate::sensitivity::{solve_exact, FlowProblem, SolveError, Solution};
use crate::solver::{local_resolve, reduced_problem, LocalizedMap, PgdConfig, SolverError};
use crate::spectral::interlacing_bound;

/// Exponent for the dense-solve term of the complexity model; between 2
/// (reusing factorizations) and 3 (naive dense linear algebra).
pub const DEFAULT_OMEGA: f64 = 3.0;

/// Tolerance used when exact optima are needed as references.
const REFERENCE_TOL: f64 = 1e-13;

/// Errors from bound evaluation, decomposition, and tuning.
#[derive(Debug, Error)]
pub enum AnalysisError {
    /// The contraction proxy is at least 1; the geometric bounds carry no
    /// information and no radius can be tuned from them.
    #[error(
        "no localization guarantee: the conservative contraction bound is \
         rho = {rho} >= 1 (well-conditioned costs or milder degree spread \
         are needed)"
    )]
    NoGuarantee {
        /// The conservative contraction bound.
        rho: f64,
    },
    /// Target accuracy must be positive and finite.
    #[error("target accuracy {epsilon} is not a positive finite number")]
    InvalidEpsilon {
        /// The offending target.
        epsilon: f64,
    },
    /// The complexity exponent must lie in `[2, 3]`.
    #[error("complexity exponent {omega} outside [2, 3]")]
    InvalidOmega {
        /// The offending exponent.
        omega: f64,
    },
    /// A perturbation with no support cannot be decomposed against.
    #[error("perturbation is identically zero; nothing to measure")]
    EmptySupport,
    /// Forwarded solver error.
    #[error(transparent)]
    Solver(#[from] SolverError),
    /// Forwarded flow-problem error.
    #[error(transparent)]
    Solve(#[from] SolveError),
    /// Forwarded graph error.
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// The four structure constants that drive every localization bound:
/// curvature ratio, degree bounds, and the extreme adjacency eigenvalue
/// magnitude of the host graph.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayParams {
    /// Curvature ratio `Q = beta / alpha` across all edges.
    pub q: f64,
    /// Smallest vertex degree.
    pub k_min: usize,
    /// Largest vertex degree.
    pub k_max: usize,
    /// `max(|mu_2|, |mu_n|)` over the adjacency eigenvalues.
    pub mu: f64,
}

impl DecayParams {
    /// Reads the constants off a flow problem.
    pub fn from_problem(problem: &FlowProblem) -> Self {
        let (k_min, k_max) = problem.graph().degree_bounds();
        let (_, mu) = problem.graph().adjacency_spectrum();
        DecayParams {
            q: problem.condition_number(),
            k_min,
            k_max,
            mu,
        }
    }

    /// The same constants, measured on a subgraph instead of its host:
    /// subgraph degrees and subgraph adjacency eigenvalues. A diagnostic
    /// for how much the host-level constants overshoot on a given region.
    pub fn refined_for_subgraph(
        problem: &FlowProblem,
        sub: &Subgraph<'_>,
    ) -> Result<Self, AnalysisError> {
        let (k_min, k_max) = sub.degree_bounds();
        let verts = sub.vertices();
        let m = verts.len();
        let mut adjacency = nalgebra::DMatrix::zeros(m, m);
        for &e in sub.edges() {
            let edge = sub.parent().edges()[e];
            let i = verts.binary_search(&edge.tail).unwrap();
            let j = verts.binary_search(&edge.head).unwrap();
            adjacency[(i, j)] = 1.0;
            adjacency[(j, i)] = 1.0;
        }
        let mut eigs: Vec<f64> = adjacency
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eigs.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
        let mu = if m >= 2 {
            eigs[1].abs().max(eigs[m - 1].abs())
        } else {
            0.0
        };
        Ok(DecayParams {
            q: problem.condition_number(),
            k_min,
            k_max,
            mu,
        })
    }

    /// The conservative contraction bound
    /// `rho = Q k_max / k_min - 1 + (Q / k_min) mu`, valid for the walk of
    /// any flow whose weights respect the curvature sandwich.
    pub fn rho(&self) -> f64 {
        interlacing_bound(self.k_min as f64, self.k_max as f64, 1.0, self.q, self.mu)
    }

    /// Leading constant of the decay bound: `sqrt(2 k_max) / k_min * Q`.
    pub fn leading_constant(&self) -> f64 {
        (2.0 * self.k_max as f64).sqrt() / self.k_min as f64 * self.q
    }

    /// Bias constant `gamma = c (1 + c sqrt(k_max - 1))`, the price of
    /// summing the decay bound over the frozen boundary.
    pub fn bias_constant(&self) -> f64 {
        let c = self.leading_constant();
        c * (1.0 + c * ((self.k_max as f64 - 1.0).max(0.0)).sqrt())
    }
}

/// Evaluates the localization bias and optimization variance bounds for a
/// perturbation of norm `p_norm`, a frozen boundary at hop distance
/// `d_boundary` from the support, and `t` iterations.
///
/// `is_global` marks a re-solve over the whole graph, where the bias is
/// exactly zero (nothing is frozen). Errors with [`AnalysisError::NoGuarantee`]
/// when `rho >= 1`.
pub fn bias_variance_bounds(
    params: &DecayParams,
    p_norm: f64,
    d_boundary: usize,
    t: usize,
    is_global: bool,
) -> Result<(f64, f64), AnalysisError> {
    let rho = params.rho();
    if rho >= 1.0 {
        return Err(AnalysisError::NoGuarantee { rho });
    }
    let c = params.leading_constant();
    let gamma = params.bias_constant();
    let bias = if is_global {
        0.0
    } else {
        p_norm * gamma * rho.powi(d_boundary as i32) / ((1.0 - rho) * (1.0 - rho))
    };
    let variance =
        p_norm * c * (-(t as f64) / (2.0 * params.q)).exp() / (1.0 - rho);
    Ok((bias, variance))
}

/// Measured and predicted errors of one localized re-solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorReport {
    /// `||x*(b + p) - limit||`: the cost of freezing the outside.
    pub bias_measured: f64,
    /// `||limit - x_hat||`: the cost of stopping after `t` steps.
    pub variance_measured: f64,
    /// `||x*(b + p) - x_hat||`: the end-to-end error.
    pub error_measured: f64,
    /// Bias bound, when the conservative contraction holds (`rho < 1`) or
    /// the re-solve is global (bias is then exactly zero).
    pub bias_bound: Option<f64>,
    /// Variance bound, when the conservative contraction holds.
    pub variance_bound: Option<f64>,
    /// Conservative contraction bound.
    pub rho: f64,
    /// Leading decay constant.
    pub c: f64,
    /// Bias constant.
    pub gamma: f64,
    /// Curvature ratio.
    pub q: f64,
    /// Degree lower bound of the host graph.
    pub k_min: usize,
    /// Degree upper bound of the host graph.
    pub k_max: usize,
    /// Extreme adjacency eigenvalue magnitude of the host graph.
    pub mu: f64,
    /// Iterations taken.
    pub t: usize,
    /// Hop distance from the frozen boundary to the perturbation support;
    /// absent for a global re-solve.
    pub d_boundary: Option<usize>,
    /// Whether the re-solve covered the whole graph.
    pub is_global: bool,
}

/// Vertices of the subgraph incident to at least one frozen edge: the
/// boundary through which localization error enters.
pub fn frozen_boundary(sub: &Subgraph<'_>) -> Vec<usize> {
    let parent_edges = sub.parent().edges();
    let mut boundary: Vec<usize> = sub
        .complement_edges()
        .iter()
        .flat_map(|&e| [parent_edges[e].tail, parent_edges[e].head])
        .filter(|&v| sub.contains_vertex(v))
        .collect();
    boundary.sort_unstable();
    boundary.dedup();
    boundary
}

/// Runs one localized re-solve and measures its error decomposition
/// against exact references.
///
/// Three quantities are computed independently: the true optimum after the
/// perturbation (full Newton solve), the localized limit (Newton solve of
/// the reduced problem on the subgraph - not the localized iteration
/// itself), and the localized iterate after `t` steps. The measured bias,
/// variance, and total error always satisfy the triangle inequality
/// `error <= bias + variance`; the bounds, when present, are certified
/// from [`DecayParams`] alone.
pub fn measure_decomposition(
    problem: &FlowProblem,
    x_star: &Solution,
    perturbation: &DVector<f64>,
    sub: &Subgraph<'_>,
    t: usize,
    config: &PgdConfig,
) -> Result<ErrorReport, AnalysisError> {
    let support: Vec<usize> = (0..perturbation.len())
        .filter(|&v| perturbation[v] != 0.0)
        .collect();
    if support.is_empty() {
        return Err(AnalysisError::EmptySupport);
    }
    let p_norm = perturbation.norm();

    // Ground truth: the full problem re-solved from scratch.
    let b_new = problem.b() + perturbation;
    let truth = solve_exact(&problem.with_external_flow(b_new.clone())?, REFERENCE_TOL)?;

    // The localized limit by the independent route: exact optimum of the
    // reduced problem, spliced into the frozen flow.
    let mut limit_full = x_star.x.clone();
    if !sub.edges().is_empty() {
        let map = LocalizedMap::new(problem, sub, &b_new, &x_star.x, config)?;
        let reduced = reduced_problem(problem, sub, map.b_local())?;
        let reduced_opt = solve_exact(&reduced, REFERENCE_TOL)?;
        for (i, &e) in sub.edges().iter().enumerate() {
            limit_full[e] = reduced_opt.x[i];
        }
    }

    // The localized iterate itself.
    let local = local_resolve(problem, &x_star.x, perturbation, sub, t, config)?;

    let bias_measured = (&truth.x - &limit_full).norm();
    let variance_measured = (&limit_full - &local.x).norm();
    let error_measured = (&truth.x - &local.x).norm();

    let params = DecayParams::from_problem(problem);
    let rho = params.rho();
    let is_global = sub.is_whole();
    let d_boundary = if is_global {
        None
    } else {
        Some(
            problem
                .graph()
                .set_distance(&frozen_boundary(sub), &support)?,
        )
    };
    let (bias_bound, variance_bound) = if rho < 1.0 {
        let (b, v) =
            bias_variance_bounds(&params, p_norm, d_boundary.unwrap_or(0), t, is_global)?;
        (Some(b), Some(v))
    } else if is_global {
        // Nothing is frozen: zero bias needs no contraction argument.
        (Some(0.0), None)
    } else {
        (None, None)
    };

    Ok(ErrorReport {
        bias_measured,
        variance_measured,
        error_measured,
        bias_bound,
        variance_bound,
        rho,
        c: params.leading_constant(),
        gamma: params.bias_constant(),
        q: params.q,
        k_min: params.k_min,
        k_max: params.k_max,
        mu: params.mu,
        t,
        d_boundary,
        is_global,
    })
}

/// The tuned locality radius and iteration count for a target accuracy,
/// with the constants that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuningResult {
    /// Ball radius around the perturbation region.
    pub radius: usize,
    /// Localized iterations.
    pub iterations: usize,
    /// Bias prefactor `gamma / ((1 - rho)^2 rho^z)`.
    pub nu_bias: f64,
    /// Bias decay exponent `ln(1 / rho)` per unit radius.
    pub xi_bias: f64,
    /// Variance prefactor `c / (1 - rho)`.
    pub nu_var: f64,
    /// Variance decay exponent `1 / (2Q)` per iteration.
    pub xi_var: f64,
    /// The accuracy target the pair `(radius, iterations)` certifies.
    pub epsilon: f64,
    /// Predicted work `n_r^omega + n_r^2 t` under the worst-case ball
    /// growth model `n_r = k_max^r`; may be infinite for large radii.
    pub complexity_estimate: f64,
}

/// Picks the smallest ball radius and iteration count whose certified
/// bias + variance is at most `epsilon`, for a perturbation of norm
/// `p_norm` supported within hop distance `z` of the ball's center.
///
/// Both outputs depend on the structure constants and the target only -
/// not on the size of the graph. Each halving of `epsilon` grows the
/// radius by at most `ceil(ln 2 / xi_bias)` and the iterations by at most
/// `ceil(ln 2 / xi_var)`.
pub fn tune(
    epsilon: f64,
    p_norm: f64,
    params: &DecayParams,
    z: usize,
) -> Result<TuningResult, AnalysisError> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(AnalysisError::InvalidEpsilon { epsilon });
    }
    let rho = params.rho();
    if rho >= 1.0 {
        return Err(AnalysisError::NoGuarantee { rho });
    }
    let q = params.q;
    let c = params.leading_constant();
    let gamma = params.bias_constant();

    let nu_bias = gamma / ((1.0 - rho) * (1.0 - rho) * rho.powi(z as i32));
    let xi_bias = (1.0 / rho).ln();
    let nu_var = c / (1.0 - rho);
    let xi_var = 1.0 / (2.0 * q);

    let radius_needed = (2.0 * p_norm * nu_bias / epsilon).ln() / xi_bias;
    let radius = if radius_needed > z as f64 {
        radius_needed.ceil() as usize
    } else {
        z
    };
    let iters_needed = (2.0 * p_norm * nu_var / epsilon).ln() / xi_var;
    let iterations = if iters_needed > 0.0 {
        iters_needed.ceil() as usize
    } else {
        0
    };

    let n_r = (params.k_max as f64).powi(radius as i32);
    let complexity = complexity_estimate(n_r, iterations, DEFAULT_OMEGA)?;

    Ok(TuningResult {
        radius,
        iterations,
        nu_bias,
        xi_bias,
        nu_var,
        xi_var,
        epsilon,
        complexity_estimate: complexity,
    })
}

/// Work model for a localized re-solve on `n_r` vertices with `t` steps:
/// one `n_r^omega` setup (the projector) plus `n_r^2` per iteration.
pub fn complexity_estimate(n_r: f64, t: usize, omega: f64) -> Result<f64, AnalysisError> {
    if !(2.0..=3.0).contains(&omega) {
        return Err(AnalysisError::InvalidOmega { omega });
    }
    Ok(n_r.powf(omega) + n_r * n_r * t as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::costs::CostModel;
    use crate::graph::DirectedGraph;

    fn triangle_params() -> DecayParams {
        DecayParams {
            q: 1.0,
            k_min: 2,
            k_max: 2,
            mu: 1.0,
        }
    }

    /// The Petersen graph: 3-regular, non-bipartite, diameter 2, adjacency
    /// spectrum {3, 1 (x5), -2 (x4)}.
    fn petersen() -> DirectedGraph {
        let mut edges = Vec::new();
        for i in 0..5 {
            edges.push((i, (i + 1) % 5)); // outer cycle
        }
        for i in 0..5 {
            edges.push((5 + i, 5 + (i + 2) % 5)); // inner pentagram
        }
        for i in 0..5 {
            edges.push((i, 5 + i)); // spokes
        }
        DirectedGraph::new(10, edges).unwrap()
    }

    fn petersen_problem() -> FlowProblem {
        let g = petersen();
        let mut b = DVector::zeros(10);
        b[0] = 1.0;
        b[7] = -1.0;
        FlowProblem::new(
            g,
            vec![CostModel::quadratic(1.0, 0.0).unwrap(); 15],
            b,
        )
        .unwrap()
    }

    // ---- structure constants ---------------------------------------------

    #[test]
    fn triangle_constants() {
        let params = triangle_params();
        assert!((params.rho() - 0.5).abs() < 1e-15);
        assert!((params.leading_constant() - 1.0).abs() < 1e-15);
        assert!((params.bias_constant() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn params_from_problem() {
        let g = DirectedGraph::new(3, vec![(0, 1), (1, 2), (2, 0)]).unwrap();
        let p = FlowProblem::new(
            g,
            vec![CostModel::quadratic(1.0, 0.0).unwrap(); 3],
            DVector::from_column_slice(&[1.0, -1.0, 0.0]),
        )
        .unwrap();
        let params = DecayParams::from_problem(&p);
        assert_eq!((params.k_min, params.k_max), (2, 2));
        assert!((params.q - 1.0).abs() < 1e-15);
        assert!((params.mu - 1.0).abs() < 1e-12);
        assert!((params.rho() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn petersen_spectrum_and_rho() {
        let p = petersen_problem();
        let params = DecayParams::from_problem(&p);
        assert_eq!((params.k_min, params.k_max), (3, 3));
        // mu = max(|1|, |-2|) = 2, so rho = 1 - 1 + 2/3 = 2/3.
        assert!((params.mu - 2.0).abs() < 1e-10);
        assert!((params.rho() - 2.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn refined_params_on_whole_graph_match() {
        let p = petersen_problem();
        let sub = Subgraph::whole(p.graph());
        let host = DecayParams::from_problem(&p);
        let refined = DecayParams::refined_for_subgraph(&p, &sub).unwrap();
        assert_eq!((refined.k_min, refined.k_max), (host.k_min, host.k_max));
        assert!((refined.mu - host.mu).abs() < 1e-10);
    }

    // ---- bounds -----------------------------------------------------------

    #[test]
    fn triangle_bias_variance_values() {
        // rho = 1/2, c = 1, gamma = 2: bias = 8 ||p|| (1/2)^d and the
        // variance at t = 0 is 2 ||p||.
        let params = triangle_params();
        for d in 0..4 {
            let (bias, variance) = bias_variance_bounds(&params, 1.0, d, 0, false).unwrap();
            assert!((bias - 8.0 * 0.5_f64.powi(d as i32)).abs() < 1e-12);
            assert!((variance - 2.0).abs() < 1e-12);
        }
        // Global re-solve: bias exactly zero.
        let (bias, _) = bias_variance_bounds(&params, 1.0, 0, 0, true).unwrap();
        assert_eq!(bias, 0.0);
        // Q = 1: variance falls by e^{-1/2} per step.
        let (_, v0) = bias_variance_bounds(&params, 1.0, 0, 0, false).unwrap();
        let (_, v4) = bias_variance_bounds(&params, 1.0, 0, 4, false).unwrap();
        assert!((v4 / v0 - (-2.0_f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn no_guarantee_is_typed() {
        // Q = 2 on a 3-regular graph with mu = 1: rho = 5/3 >= 1.
        let params = DecayParams {
            q: 2.0,
            k_min: 3,
            k_max: 3,
            mu: 1.0,
        };
        assert!((params.rho() - 5.0 / 3.0).abs() < 1e-12);
        assert!(matches!(
            bias_variance_bounds(&params, 1.0, 0, 0, false),
            Err(AnalysisError::NoGuarantee { .. })
        ));
        assert!(matches!(
            tune(1e-3, 1.0, &params, 1),
            Err(AnalysisError::NoGuarantee { .. })
        ));
    }

    // ---- measured decomposition ---------------------------------------------

    #[test]
    fn petersen_decomposition_obeys_bounds() {
        let p = petersen_problem();
        let base = solve_exact(&p, 1e-13).unwrap();
        // Perturb across the edge (0, 1); re-solve in the radius-1 ball
        // around 0 (the star {0, 1, 4, 5}).
        let mut pert = DVector::zeros(10);
        pert[0] = 0.3;
        pert[1] = -0.3;
        let sub = p.graph().ball(0, 1);
        assert_eq!(sub.vertices(), &[0, 1, 4, 5]);
        for &t in &[0, 1, 5, 40] {
            let report =
                measure_decomposition(&p, &base, &pert, &sub, t, &PgdConfig::default())
                    .unwrap();
            assert!(
                report.error_measured
                    <= report.bias_measured + report.variance_measured + 1e-10
            );
            assert!((report.rho - 2.0 / 3.0).abs() < 1e-10);
            assert_eq!(report.d_boundary, Some(0));
            assert!(!report.is_global);
            let bias_bound = report.bias_bound.unwrap();
            let variance_bound = report.variance_bound.unwrap();
            assert!(
                report.bias_measured <= bias_bound,
                "t={t}: bias {} above bound {}",
                report.bias_measured,
                bias_bound
            );
            assert!(
                report.variance_measured <= variance_bound + 1e-12,
                "t={t}: variance {} above bound {}",
                report.variance_measured,
                variance_bound
            );
        }
        // More iterations kill the variance but leave the bias.
        let early =
            measure_decomposition(&p, &base, &pert, &sub, 0, &PgdConfig::default()).unwrap();
        let late =
            measure_decomposition(&p, &base, &pert, &sub, 60, &PgdConfig::default()).unwrap();
        assert!(late.variance_measured < 1e-10);
        assert!((late.bias_measured - early.bias_measured).abs() < 1e-12);
        assert!(late.error_measured <= late.bias_bound.unwrap() + 1e-10);
    }

    #[test]
    fn global_resolve_has_zero_bias() {
        let p = petersen_problem();
        let base = solve_exact(&p, 1e-13).unwrap();
        let mut pert = DVector::zeros(10);
        pert[2] = 1.0;
        pert[8] = -1.0;
        let sub = Subgraph::whole(p.graph());
        let report =
            measure_decomposition(&p, &base, &pert, &sub, 30, &PgdConfig::default()).unwrap();
        assert!(report.is_global);
        assert_eq!(report.d_boundary, None);
        assert_eq!(report.bias_bound, Some(0.0));
        assert!(report.bias_measured < 1e-9);
        assert!(report.error_measured < 1e-6);
    }

    #[test]
    fn zero_perturbation_is_rejected() {
        let p = petersen_problem();
        let base = solve_exact(&p, 1e-13).unwrap();
        let sub = p.graph().ball(0, 1);
        let pert = DVector::zeros(10);
        assert!(matches!(
            measure_decomposition(&p, &base, &pert, &sub, 3, &PgdConfig::default()),
            Err(AnalysisError::EmptySupport)
        ));
    }

    #[test]
    fn frozen_boundary_of_ball() {
        let p = petersen_problem();
        let sub = p.graph().ball(0, 1);
        // Every vertex of the star {0, 1, 4, 5} touches a frozen edge: the
        // leaves reach outward, and 0's own spokes are inside, but 0 has
        // no frozen edge... except all its edges are in the ball, so the
        // boundary is exactly the leaves.
        assert_eq!(frozen_boundary(&sub), vec![1, 4, 5]);
        // Whole graph: nothing is frozen.
        assert!(frozen_boundary(&Subgraph::whole(p.graph())).is_empty());
    }

    // ---- tuning ---------------------------------------------------------------

    #[test]
    fn tune_pins_radius_and_iterations() {
        // Triangle constants, z = 1, ||p|| = 1, eps = 1e-3:
        // nu_bias = 2 / ((1/2)^2 (1/2)) = 16, xi_bias = ln 2,
        // r = ceil(ln(32000)/ln 2) = 15; nu_var = 2, xi_var = 1/2,
        // t = ceil(2 ln 4000) = 17.
        let result = tune(1e-3, 1.0, &triangle_params(), 1).unwrap();
        assert_eq!(result.radius, 15);
        assert_eq!(result.iterations, 17);
        assert!((result.nu_bias - 16.0).abs() < 1e-12);
        assert!((result.xi_bias - 2.0_f64.ln()).abs() < 1e-15);
        assert!((result.nu_var - 2.0).abs() < 1e-12);
        assert!((result.xi_var - 0.5).abs() < 1e-15);
        // The certified pair indeed meets the target.
        let (bias, variance) = bias_variance_bounds(
            &triangle_params(),
            1.0,
            result.radius - 1,
            result.iterations,
            false,
        )
        .unwrap();
        assert!(bias + variance <= 1e-3);
    }

    #[test]
    fn tune_loose_target_degenerates() {
        // A target looser than both prefactors needs no localization at
        // all: radius stays at z and zero iterations are certified.
        let result = tune(64.0, 1.0, &triangle_params(), 1).unwrap();
        assert_eq!(result.radius, 1);
        assert_eq!(result.iterations, 0);
    }

    #[test]
    fn tune_halving_increments_are_bounded() {
        let params = triangle_params();
        let dr_max = (2.0_f64.ln() / 2.0_f64.ln()).ceil() as usize; // 1
        let dt_max = (2.0_f64.ln() / 0.5).ceil() as usize; // 2
        let mut eps = 1.0;
        let mut prev = tune(eps, 1.0, &params, 2).unwrap();
        for _ in 0..20 {
            eps /= 2.0;
            let next = tune(eps, 1.0, &params, 2).unwrap();
            assert!(next.radius >= prev.radius);
            assert!(next.iterations >= prev.iterations);
            assert!(next.radius - prev.radius <= dr_max);
            assert!(next.iterations - prev.iterations <= dt_max);
            prev = next;
        }
    }

    #[test]
    fn tune_rejects_bad_epsilon() {
        assert!(matches!(
            tune(0.0, 1.0, &triangle_params(), 1),
            Err(AnalysisError::InvalidEpsilon { .. })
        ));
        assert!(matches!(
            tune(f64::NAN, 1.0, &triangle_params(), 1),
            Err(AnalysisError::InvalidEpsilon { .. })
        ));
    }

    #[test]
    fn complexity_model() {
        assert!((complexity_estimate(10.0, 5, 3.0).unwrap() - 1500.0).abs() < 1e-12);
        assert!((complexity_estimate(10.0, 0, 2.0).unwrap() - 100.0).abs() < 1e-12);
        assert!(matches!(
            complexity_estimate(10.0, 5, 1.5),
            Err(AnalysisError::InvalidOmega { .. })
        ));
        // Worst-case ball growth can overflow; that is reported, not hidden.
        let result = tune(1e-12, 1.0, &triangle_params(), 0).unwrap();
        assert!(result.complexity_estimate.is_finite() || result.complexity_estimate.is_infinite());
    }
}
