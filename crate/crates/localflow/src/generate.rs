//! Seeded generators for the graph families used in experiments: cycles,
//! paths, 2D grids, and random k-regular graphs via the pairing model.
//!
//! Every generator returns a ready-to-solve [`FlowProblem`] with one unit
//! of flow injected at the first vertex and extracted at the last, and the
//! same cost model on every edge; callers swap in other demands with
//! [`FlowProblem::with_external_flow`]. Given the same arguments and seed,
//! a generator always returns the same problem.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::costs::{CostError, CostModel};
use crate::graph::{DirectedGraph, GraphError};
use crate::sensitivity::{FlowProblem, SolveError};

/// Attempts of the pairing model before giving up.
pub const PAIRING_RETRY_BUDGET: usize = 1000;

/// Errors from problem generation.
#[derive(Debug, Error)]
pub enum GenerateError {
    /// The family needs more vertices than requested.
    #[error("{family} needs at least {min} vertices, got {got}")]
    TooSmall {
        /// Which family.
        family: &'static str,
        /// Minimum size.
        min: usize,
        /// Requested size.
        got: usize,
    },
    /// `k`-regular graphs on `n` vertices need `k n` even.
    #[error("no {k}-regular graph on {n} vertices exists: k*n must be even")]
    Parity {
        /// Vertex count.
        n: usize,
        /// Degree.
        k: usize,
    },
    /// The degree must satisfy `1 <= k < n`.
    #[error("degree k = {k} invalid for n = {n} vertices (need 1 <= k < n)")]
    InvalidDegree {
        /// Degree.
        k: usize,
        /// Vertex count.
        n: usize,
    },
    /// The pairing model kept producing self-loops, multi-edges, or
    /// disconnected graphs.
    #[error("pairing model failed to produce a simple connected graph in {attempts} attempts")]
    RetriesExhausted {
        /// Attempts made.
        attempts: usize,
    },
    /// Forwarded cost validation error.
    #[error(transparent)]
    Cost(#[from] CostError),
    /// Forwarded graph construction error.
    #[error(transparent)]
    Graph(#[from] GraphError),
    /// Forwarded problem construction error.
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Unit demand: one unit in at vertex 0, out at vertex `n - 1`.
pub fn unit_demand(n: usize) -> DVector<f64> {
    let mut b = DVector::zeros(n);
    b[0] = 1.0;
    b[n - 1] = -1.0;
    b
}

fn assemble(
    graph: DirectedGraph,
    cost: &CostModel,
) -> Result<FlowProblem, GenerateError> {
    let n = graph.n_vertices();
    let m = graph.n_edges();
    Ok(FlowProblem::new(graph, vec![cost.clone(); m], unit_demand(n))?)
}

/// The cycle on `n >= 3` vertices, edges `(i, i+1)` plus `(n-1, 0)`.
pub fn cycle(n: usize, cost: &CostModel) -> Result<FlowProblem, GenerateError> {
    if n < 3 {
        return Err(GenerateError::TooSmall {
            family: "cycle",
            min: 3,
            got: n,
        });
    }
    let edges: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    assemble(DirectedGraph::new(n, edges)?, cost)
}

/// The path on `n >= 2` vertices, edges `(i, i+1)`.
pub fn path(n: usize, cost: &CostModel) -> Result<FlowProblem, GenerateError> {
    if n < 2 {
        return Err(GenerateError::TooSmall {
            family: "path",
            min: 2,
            got: n,
        });
    }
    let edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
    assemble(DirectedGraph::new(n, edges)?, cost)
}

/// The `side x side` grid (`side >= 2`): vertex `(r, c)` is `r * side + c`,
/// and each vertex emits its rightward edge then its downward edge in
/// row-major order.
pub fn grid(side: usize, cost: &CostModel) -> Result<FlowProblem, GenerateError> {
    if side < 2 {
        return Err(GenerateError::TooSmall {
            family: "grid",
            min: 2,
            got: side,
        });
    }
    let mut edges = Vec::with_capacity(2 * side * (side - 1));
    for r in 0..side {
        for c in 0..side {
            let v = r * side + c;
            if c + 1 < side {
                edges.push((v, v + 1));
            }
            if r + 1 < side {
                edges.push((v, v + side));
            }
        }
    }
    assemble(DirectedGraph::new(side * side, edges)?, cost)
}

/// A uniformly random simple connected `k`-regular graph on `n` vertices
/// by the pairing (configuration) model: `k` stubs per vertex are shuffled
/// and paired; pairings with self-loops or repeated edges are rejected
/// wholesale, as are disconnected outcomes. Edges are oriented from the
/// lower to the higher endpoint and sorted, so equal seeds give equal
/// graphs.
pub fn random_regular(
    n: usize,
    k: usize,
    seed: u64,
    cost: &CostModel,
) -> Result<FlowProblem, GenerateError> {
    if n < 2 {
        return Err(GenerateError::TooSmall {
            family: "random-regular",
            min: 2,
            got: n,
        });
    }
    if k == 0 || k >= n {
        return Err(GenerateError::InvalidDegree { k, n });
    }
    if (n * k) % 2 != 0 {
        return Err(GenerateError::Parity { n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(k)).collect();
    'attempt: for _ in 0..PAIRING_RETRY_BUDGET {
        stubs.shuffle(&mut rng);
        let mut edges: Vec<(usize, usize)> = Vec::with_capacity(n * k / 2);
        let mut seen = std::collections::HashSet::with_capacity(n * k / 2);
        for pair in stubs.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            if a == b {
                continue 'attempt;
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                continue 'attempt;
            }
            edges.push(key);
        }
        edges.sort_unstable();
        match DirectedGraph::new(n, edges) {
            Ok(graph) => return assemble(graph, cost),
            Err(GraphError::Disconnected { .. }) => continue 'attempt,
            Err(other) => return Err(other.into()),
        }
    }
    Err(GenerateError::RetriesExhausted {
        attempts: PAIRING_RETRY_BUDGET,
    })
}
