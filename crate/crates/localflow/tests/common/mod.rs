//! Shared fixtures for the integration suites: the graph corpus, finite
//! difference and SVD oracles, and a seeded connected-subgraph sampler.
//!
//! Each integration target compiles its own copy and uses its own slice of
//! the helpers, so unused-code lints are silenced here.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use localflow::costs::CostModel;
use localflow::generate;
use localflow::graph::{DirectedGraph, Subgraph};
use localflow::sensitivity::{solve_exact, FlowProblem};

/// A corpus instance with a readable name for failure messages.
pub struct Named {
    pub name: String,
    pub problem: FlowProblem,
}

fn quad() -> CostModel {
    CostModel::quadratic(1.0, 0.0).unwrap()
}

fn lc() -> CostModel {
    CostModel::log_cosh(1.0, 2.0).unwrap()
}

/// Rebuild a generated problem with per-edge cost variation so the weighted
/// Laplacian is not a scalar multiple of the unweighted one.
fn vary_costs(problem: FlowProblem, quadratic: bool) -> FlowProblem {
    let graph = problem.graph().clone();
    let b = problem.b().clone();
    let m = graph.n_edges();
    let costs: Vec<CostModel> = (0..m)
        .map(|e| {
            let bump = 1.0 + 0.25 * (e % 4) as f64;
            if quadratic {
                CostModel::quadratic(bump, 0.1 * (e % 3) as f64).unwrap()
            } else {
                CostModel::log_cosh(bump, 2.0 + 0.5 * (e % 2) as f64).unwrap()
            }
        })
        .collect();
    FlowProblem::new(graph, costs, b).unwrap()
}

/// The thirteen-graph corpus with the given uniform cost model.
fn graphs(cost: &CostModel) -> Vec<(String, FlowProblem)> {
    vec![
        ("triangle".into(), generate::cycle(3, cost).unwrap()),
        ("path-5".into(), generate::path(5, cost).unwrap()),
        ("path-10".into(), generate::path(10, cost).unwrap()),
        ("path-30".into(), generate::path(30, cost).unwrap()),
        ("cycle-5".into(), generate::cycle(5, cost).unwrap()),
        ("cycle-9".into(), generate::cycle(9, cost).unwrap()),
        ("cycle-20".into(), generate::cycle(20, cost).unwrap()),
        ("grid-3".into(), generate::grid(3, cost).unwrap()),
        ("grid-4".into(), generate::grid(4, cost).unwrap()),
        ("grid-5".into(), generate::grid(5, cost).unwrap()),
        ("grid-6".into(), generate::grid(6, cost).unwrap()),
        (
            "regular-20".into(),
            generate::random_regular(20, 3, 42, cost).unwrap(),
        ),
        (
            "regular-50".into(),
            generate::random_regular(50, 3, 7, cost).unwrap(),
        ),
    ]
}

/// Corpus with quadratic costs (mixed coefficients).
pub fn corpus_quadratic() -> Vec<Named> {
    graphs(&quad())
        .into_iter()
        .map(|(name, p)| Named {
            name: format!("{name}/quadratic"),
            problem: vary_costs(p, true),
        })
        .collect()
}

/// Corpus with log-cosh costs (mixed coefficients).
pub fn corpus_logcosh() -> Vec<Named> {
    graphs(&lc())
        .into_iter()
        .map(|(name, p)| Named {
            name: format!("{name}/logcosh"),
            problem: vary_costs(p, false),
        })
        .collect()
}

/// Both cost flavors of every corpus graph.
pub fn corpus_all() -> Vec<Named> {
    let mut all = corpus_quadratic();
    all.extend(corpus_logcosh());
    all
}

/// A deterministic balanced dipole `e_u - e_v` with `u, v` drawn by the rng.
pub fn random_dipole(n: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let u = rng.gen_range(0..n);
    let mut v = rng.gen_range(0..n);
    while v == u {
        v = rng.gen_range(0..n);
    }
    let mut p = DVector::zeros(n);
    p[u] = 1.0;
    p[v] = -1.0;
    p
}

/// Central finite difference of the optimizer along `p` at step `h`.
pub fn fd_derivative(problem: &FlowProblem, p: &DVector<f64>, h: f64) -> DVector<f64> {
    let plus = solve_exact(
        &problem.with_external_flow(problem.b() + h * p).unwrap(),
        1e-13,
    )
    .unwrap();
    let minus = solve_exact(
        &problem.with_external_flow(problem.b() - h * p).unwrap(),
        1e-13,
    )
    .unwrap();
    (plus.x - minus.x) / (2.0 * h)
}

/// Independent pseudoinverse oracle: full SVD with hard rank truncation.
pub fn svd_pinv(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.clone().pseudo_inverse(1e-10).unwrap()
}

/// A connected induced subgraph grown from `start` by seeded breadth-first
/// accretion until it holds `target` vertices.
pub fn sampled_induced_subgraph<'a>(
    graph: &'a DirectedGraph,
    start: usize,
    target: usize,
    rng: &mut ChaCha8Rng,
) -> Subgraph<'a> {
    let n = graph.n_vertices();
    let target = target.clamp(2, n);
    let mut chosen = vec![false; n];
    let mut members = vec![start];
    chosen[start] = true;
    let mut frontier: Vec<usize> = graph
        .neighbors(start)
        .iter()
        .copied()
        .filter(|&v| !chosen[v])
        .collect();
    while members.len() < target && !frontier.is_empty() {
        let pick = rng.gen_range(0..frontier.len());
        let v = frontier.swap_remove(pick);
        if chosen[v] {
            continue;
        }
        chosen[v] = true;
        members.push(v);
        frontier.extend(graph.neighbors(v).iter().copied().filter(|&w| !chosen[w]));
    }
    members.sort_unstable();
    Subgraph::induced(graph, members).expect("BFS-grown induced subgraphs are connected")
}
