//! Geometric decay of the flow response with distance from a perturbation.
//!
//! A localized demand change barely moves flows on far-away edges: the
//! response through the sensitivity operator decays like `lambda^d` in the
//! hop distance `d`, where `lambda` is the contraction factor of the
//! induced random walk. This example measures the decay profile on a
//! random 3-regular graph and compares it with the certified bounds.
//!
//! Run with: `cargo run --example decay_of_correlation`

use localflow::generate;
use localflow::sensitivity::{sensitivity_operator, solve_exact};
use localflow::spectral::{decay_bound, walk_data};
use localflow::CostModel;
use nalgebra::DVector;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cost = CostModel::quadratic(1.0, 0.0)?;
    let problem = generate::random_regular(20, 3, 42, &cost)?;
    let graph = problem.graph();
    let sol = solve_exact(&problem, 1e-11)?;
    let op = sensitivity_operator(&problem, &sol)?;
    let walk = walk_data(&op)?;
    println!(
        "random 3-regular graph on 20 vertices: lambda = {:.4}",
        walk.lambda
    );

    // A unit dipole: inject at vertex 0, withdraw at one of its neighbors.
    let neighbor = graph.neighbors(0)[0];
    let mut p = DVector::zeros(graph.n_vertices());
    p[0] = 1.0;
    p[neighbor] = -1.0;
    let response = op.apply(&p);

    // Distance of each edge from the dipole = the closer endpoint's hop
    // distance to the support {0, neighbor}.
    let from_zero = graph.distances_from(0);
    let from_nb = graph.distances_from(neighbor);
    let edge_distance = |e: usize| -> usize {
        let edge = &graph.edges()[e];
        [edge.tail, edge.head]
            .iter()
            .map(|&v| from_zero[v].min(from_nb[v]))
            .min()
            .unwrap()
    };

    let max_d = (0..graph.n_edges()).map(edge_distance).max().unwrap();
    let mut profile = vec![0.0_f64; max_d + 1];
    for e in 0..graph.n_edges() {
        profile[edge_distance(e)] = profile[edge_distance(e)].max(response[e].abs());
    }

    println!("\nresponse profile (largest |dx| among edges at distance d):");
    println!("  {:>2}  {:>12}  {:>12}", "d", "measured", "lambda^d ref");
    for (d, &measured) in profile.iter().enumerate() {
        let reference = profile[0] * walk.lambda.powi(d as i32);
        println!("  {d:>2}  {measured:>12.3e}  {reference:>12.3e}");
    }

    // Certified version: march a radius-1 ball away from the dipole and
    // bound the response norm on its edges. `evaluated` uses the walk at
    // the current flow; `conservative` replaces it with curvature and
    // degree bounds, valid at every operating point.
    let vertex_distance = |v: usize| from_zero[v].min(from_nb[v]);
    let max_vd = (0..graph.n_vertices()).map(vertex_distance).max().unwrap();
    println!("\nradius-1 balls at increasing distance from the dipole:");
    println!(
        "  {:>6}  {:>4}  {:>12}  {:>12}  {:>12}",
        "center", "dist", "measured", "evaluated", "conservative"
    );
    for d in 1..=max_vd {
        // A representative vertex at each hop distance.
        let Some(center) = (0..graph.n_vertices()).find(|&v| vertex_distance(v) == d) else {
            continue;
        };
        let sub = graph.ball(center, 1);
        let bound = decay_bound(&problem, &op, &walk, &sub, &[0, neighbor], p.norm())?;
        let measured: f64 = sub
            .edges()
            .iter()
            .map(|&e| response[e] * response[e])
            .sum::<f64>()
            .sqrt();
        let conservative = bound
            .conservative
            .map(|b| format!("{b:>12.3e}"))
            .unwrap_or_else(|| format!("{:>12}", "none (rho>=1)"));
        println!(
            "  {center:>6}  {:>4}  {measured:>12.3e}  {:>12.3e}  {conservative}",
            bound.distance, bound.evaluated
        );
    }
    println!("\nevery measured value sits below its bound, and the bound itself");
    println!("shrinks geometrically as the ball recedes from the dipole. (The");
    println!("ball's distance is one less than its center's: its rim reaches");
    println!("one hop closer.)");

    Ok(())
}
