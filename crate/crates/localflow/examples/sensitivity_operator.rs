//! How the optimizer of a convex flow problem moves when the demands move.
//!
//! Solves a 4x4 grid with saturating (log-cosh) edge costs, assembles the
//! sensitivity operator `S(b) = Sigma Aᵀ L⁺`, and checks its directional
//! derivative against a central finite difference of the full solver.
//!
//! Run with: `cargo run --example sensitivity_operator`

use localflow::generate;
use localflow::sensitivity::{directional_derivative, sensitivity_operator, solve_exact};
use localflow::CostModel;
use nalgebra::DVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A 4x4 grid, one unit of flow injected at the top-left corner and
    // withdrawn at the bottom-right. Log-cosh costs are quadratic near
    // zero and linear for large flows, so the Hessian genuinely depends
    // on the operating point.
    let cost = CostModel::log_cosh(1.0, 3.0)?;
    let problem = generate::grid(4, &cost)?;
    let n = problem.graph().n_vertices();
    let m = problem.graph().n_edges();
    println!("grid 4x4: {n} vertices, {m} edges, log-cosh costs");

    let sol = solve_exact(&problem, 1e-11)?;
    println!(
        "solved in {} Newton steps  (balance residual {:.2e}, stationarity {:.2e})",
        sol.iterations, sol.residual, sol.stationarity
    );

    // The operator bundles the inverse-Hessian edge weights, the weighted
    // Laplacian they induce, its pseudoinverse, and S itself.
    let op = sensitivity_operator(&problem, &sol)?;
    println!(
        "edge weights sigma in [{:.4}, {:.4}]",
        op.sigma.min(),
        op.sigma.max()
    );

    // Shift one unit of injection from vertex 5 to vertex 10 (two interior
    // vertices). The direction must be balanced: S is only defined along
    // directions that keep the problem feasible.
    let mut dbdeps = DVector::zeros(n);
    dbdeps[5] = 1.0;
    dbdeps[10] = -1.0;
    let dx = directional_derivative(&op, &dbdeps)?;

    // Independent check: central finite difference of the solver itself.
    let h = 1e-5;
    let plus = solve_exact(&problem.with_external_flow(problem.b() + h * &dbdeps)?, 1e-12)?;
    let minus = solve_exact(&problem.with_external_flow(problem.b() - h * &dbdeps)?, 1e-12)?;
    let fd = (plus.x - minus.x) / (2.0 * h);
    let agreement = (&dx - &fd).norm() / dx.norm();
    println!("derivative vs. finite difference: relative gap {agreement:.2e}");

    // Differentiating the constraint Ax*(b) = b gives A S = I on balanced
    // vectors, so the derivative must reproduce the demand direction.
    let conserved = (problem.incidence().apply(&dx) - &dbdeps).norm();
    println!("A (S p) - p: {conserved:.2e}");

    // Where does the response concentrate? Rank edges by |dx|.
    let mut ranked: Vec<(usize, f64)> = dx.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()));
    println!("\nstrongest responses:");
    for &(e, v) in ranked.iter().take(5) {
        let edge = &problem.graph().edges()[e];
        println!("  edge {:>2} ({} -> {}): {v:+.6}", e, edge.tail, edge.head);
    }
    println!(
        "weakest response: {:.3e} (edges far from the shifted demand barely move)",
        ranked.last().map(|&(_, v)| v.abs()).unwrap_or(0.0)
    );

    Ok(())
}
