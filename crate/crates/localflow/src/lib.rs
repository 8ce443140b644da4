//! Sensitivity analysis and localized re-solving for strictly convex
//! network-flow problems.
//!
//! A flow problem lives on a connected directed graph: each edge `e` carries
//! a strictly convex cost `f_e` and each vertex an external flow `b_v`, with
//! the balance constraint `A x = b` (`A` the vertex/edge incidence matrix).
//! The crate answers three questions about the optimizer `x*(b)`:
//!
//! 1. **How does `x*(b)` move when `b` moves?** The [`sensitivity`] module
//!    computes the closed-form derivative operator `S(b) = Σ Aᵀ L⁺` built
//!    from the inverse-Hessian weights `Σ` and the induced weighted graph
//!    Laplacian `L = A Σ Aᵀ`.
//! 2. **Why is the response localized?** The [`spectral`] module ties `S(b)`
//!    to a reversible random walk on the weighted graph and proves the
//!    correlation between a perturbation and far-away edges decays
//!    geometrically in graph distance, at the walk's spectral rate.
//! 3. **Can we exploit that locality?** The [`solver`] module re-solves only
//!    a neighborhood of a localized perturbation with projected gradient
//!    steps, and the [`analysis`] module provides computable bias/variance
//!    bounds plus a tuning rule that picks the neighborhood radius and the
//!    iteration count independently of the total graph size.
//!
//! Supporting cast: [`graph`] (directed graphs, incidence matrices,
//! subgraphs, balls, boundaries), [`costs`] (edge cost models), [`generate`]
//! (seeded graph families), [`io`] (JSON formats), and [`cli`] (the
//! `localflow` command-line front end).
//!
//! The `examples/` directory is the guided tour: each example is a runnable
//! walkthrough of one capability, from computing a sensitivity operator to
//! reproducing the dimension-free tuning experiment.

pub mod analysis;
pub mod cli;
pub mod costs;
pub mod generate;
pub mod graph;
pub mod io;
pub mod sensitivity;
pub mod solver;
pub mod spectral;

pub use analysis::{DecayParams, ErrorReport, TuningResult};
pub use costs::CostModel;
pub use graph::{DirectedGraph, IncidenceMatrix, Subgraph};
pub use sensitivity::{FlowProblem, SensitivityOperator, Solution};
pub use solver::PgdConfig;
pub use spectral::{KilledWalkData, SpectralReport, WalkData};
