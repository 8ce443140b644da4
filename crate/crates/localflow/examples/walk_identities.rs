//! The random-walk dictionary behind the sensitivity operator.
//!
//! The weighted graph built from the inverse Hessian induces a reversible
//! random walk, and every entry of the Laplacian pseudoinverse has a walk
//! reading: Green functions of the killed walk, hitting probabilities,
//! and expected visit counts. This example computes both sides of the
//! dictionary on a 5-cycle and verifies them against each other and
//! against a Monte Carlo simulation.
//!
//! Run with: `cargo run --example walk_identities`

use localflow::generate;
use localflow::sensitivity::{sensitivity_operator, solve_exact};
use localflow::spectral::{
    hitting_probability, identity_residuals, killed_walk, simulate_killed_walk, walk_data,
};
use localflow::CostModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // An odd cycle is not bipartite, so the walk mixes and every geometric
    // series below converges.
    let cost = CostModel::quadratic(1.0, 0.0)?;
    let problem = generate::cycle(5, &cost)?;
    let sol = solve_exact(&problem, 1e-11)?;
    let op = sensitivity_operator(&problem, &sol)?;

    let walk = walk_data(&op)?;
    println!(
        "5-cycle walk: lambda = {:.6}  (eigenvalues {:?})",
        walk.lambda,
        walk.eigenvalues
            .iter()
            .map(|x| (x * 1e4).round() / 1e4)
            .collect::<Vec<_>>()
    );
    println!(
        "series horizon for a 1e-10 tail: {} steps",
        walk.series_horizon(1e-10)?
    );

    // Kill the walk at vertex 0: the restricted Laplacian inverse is the
    // Green function of the absorbed chain.
    let z_bar = 0;
    let killed = killed_walk(&op, z_bar)?;
    println!("\nabsorbing at vertex {z_bar}:");
    println!(
        "  expected visits to 2 from 2 before absorption: {:.6}",
        killed.expected_visits(2)?
    );
    let p13 = hitting_probability(&killed, 1, 3)?;
    println!("  P[walk from 1 reaches 3 before 0]          : {p13:.6}");

    // Independent confirmation by simulation. The estimate should land
    // within a few standard errors of the closed form.
    let sim = simulate_killed_walk(&walk, 1, 3, z_bar, 200_000, 7)?;
    println!(
        "  Monte Carlo ({} walks): {:.6} +/- {:.6}  ({:+.2} se from exact)",
        sim.walks,
        sim.hit_probability,
        sim.hit_se,
        (sim.hit_probability - p13) / sim.hit_se
    );
    let exact_visits = killed.degrees[killed.index_of(3).unwrap()] * killed.green_entry(1, 3)?;
    println!(
        "  visits to 3 from 1: exact {:.6}, simulated {:.6} +/- {:.6}",
        exact_visits, sim.expected_visits, sim.visits_se
    );

    // The full identity suite: Moore-Penrose residuals, the Green identity
    // at every absorbing vertex, series agreement over all 4-tuples, the
    // summed identity, and the localized spectral bound.
    let suite = identity_residuals(&problem, &op, &walk)?;
    println!("\nidentity suite:");
    println!("  pseudoinverse (Moore-Penrose) : {:.2e}", suite.pseudoinverse);
    println!("  killed inverse vs. fundamental: {:.2e}", suite.killed_inverse);
    println!("  killed Green vs. restricted   : {:.2e}", suite.killed_green);
    println!("  restricted pinv vs. Green     : {:.2e}", suite.restricted_pinv);
    if let Some(r) = suite.green_series {
        println!("  series vs. pseudoinverse      : {:.2e}", r);
    }
    if let Some(r) = suite.sum_over_z {
        println!("  summed identity               : {:.2e}", r);
    }
    if let Some(r) = suite.spectral_bound_excess {
        println!("  spectral bound excess         : {:.2e}  (<= 0 means the bound holds)", r);
    }
    println!("  worst residual                : {:.2e}", suite.worst());

    Ok(())
}
