//! The `localflow` command-line front end.
//!
//! Five subcommands: `generate` (graph families to JSON), `solve` (exact
//! solve + spectral report), `perturb` (localized re-solve with measured
//! vs. predicted error), `verify` (the identity suite with Monte Carlo and
//! interlacing cross-checks), and `sweep` (bias/variance grids to CSV).
//!
//! Exit codes: 0 success, 1 tolerance failure, 2 input validation,
//! 3 internal numerical failure. All commands write either to `--output`
//! or to stdout, and are byte-stable for a fixed seed and input.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::analysis::{complexity_estimate, measure_decomposition, tune, AnalysisError, DecayParams};
use crate::costs::{CostError, CostModel};
use crate::generate::{self, GenerateError};
use crate::graph::GraphError;
use crate::io::{self, GraphFile, IdTables, IoError, SolutionFile};
use crate::sensitivity::{sensitivity_operator, solve_exact, FlowProblem, SolveError};
use crate::solver::{pgd_solve, PgdConfig, SolverError};
use crate::spectral::{
    hitting_probability, identity_residuals, interlacing_bound, interlacing_interval,
    killed_walk, simulate_killed_walk, spectral_report, subgraph_walk_eigenvalues, walk_data,
    SpectralError, WalkData,
};

/// Walks simulated by `verify`'s Monte Carlo cross-check.
const VERIFY_WALKS: usize = 20_000;
/// Iteration cap for the projected-gradient cross-check in `solve`.
const PGD_CROSS_CHECK_ITERS: usize = 200_000;

/// A classified command failure: a message plus the process exit code.
#[derive(Debug)]
pub struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    /// Input validation failure (exit 2).
    pub fn validation(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    /// Tolerance failure (exit 1).
    pub fn tolerance(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    /// The process exit code for this failure.
    pub fn code(&self) -> i32 {
        self.code
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

fn code_of_cost(e: &CostError) -> i32 {
    match e {
        CostError::InverseGradientDiverged { .. } => 3,
        _ => 2,
    }
}

fn code_of_solve(e: &SolveError) -> i32 {
    match e {
        SolveError::Unbalanced { .. }
        | SolveError::DimensionMismatch { .. }
        | SolveError::DirectionNotBalanced { .. } => 2,
        SolveError::Cost(c) => code_of_cost(c),
        SolveError::Graph(_) => 2,
        _ => 3,
    }
}

fn code_of_solver(e: &SolverError) -> i32 {
    match e {
        SolverError::Solve(s) => code_of_solve(s),
        SolverError::Graph(_) => 2,
        _ => 2,
    }
}

fn code_of_analysis(e: &AnalysisError) -> i32 {
    match e {
        AnalysisError::Solver(s) => code_of_solver(s),
        AnalysisError::Solve(s) => code_of_solve(s),
        AnalysisError::Graph(_) => 2,
        _ => 2,
    }
}

fn code_of_spectral(e: &SpectralError) -> i32 {
    match e {
        SpectralError::InvalidVertex { .. } | SpectralError::NoEdges => 2,
        _ => 3,
    }
}

macro_rules! classify {
    ($ty:ty, $code:expr) => {
        impl From<$ty> for CliError {
            fn from(e: $ty) -> Self {
                #[allow(clippy::redundant_closure_call)]
                let code = ($code)(&e);
                CliError {
                    code,
                    message: e.to_string(),
                }
            }
        }
    };
}

classify!(GraphError, |_: &GraphError| 2);
classify!(CostError, code_of_cost);
classify!(SolveError, code_of_solve);
classify!(SolverError, code_of_solver);
classify!(AnalysisError, code_of_analysis);
classify!(SpectralError, code_of_spectral);
classify!(GenerateError, |e: &GenerateError| match e {
    GenerateError::RetriesExhausted { .. } => 3,
    GenerateError::Cost(c) => code_of_cost(c),
    GenerateError::Solve(s) => code_of_solve(s),
    _ => 2,
});
classify!(IoError, |e: &IoError| match e {
    IoError::Solve(s) => code_of_solve(s),
    _ => 2,
});

/// Graph families known to `generate` and `sweep`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    /// Cycle on `size` vertices.
    Cycle,
    /// Path on `size` vertices.
    Path,
    /// `size x size` grid.
    Grid,
    /// Random simple connected `k`-regular graph on `size` vertices.
    RandomRegular,
}

impl Family {
    fn build(
        self,
        size: usize,
        k: usize,
        seed: u64,
        cost: &CostModel,
    ) -> Result<FlowProblem, GenerateError> {
        match self {
            Family::Cycle => generate::cycle(size, cost),
            Family::Path => generate::path(size, cost),
            Family::Grid => generate::grid(size, cost),
            Family::RandomRegular => generate::random_regular(size, k, seed, cost),
        }
    }
}

/// Command-line interface definition.
#[derive(Debug, Parser)]
#[command(
    name = "localflow",
    version,
    about = "Sensitivity analysis and localized re-solving for convex network flows"
)]
pub struct Cli {
    /// Which command to run.
    #[command(subcommand)]
    pub command: Command,
}

/// The five subcommands.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a graph file from a named family.
    Generate {
        /// Graph family.
        #[arg(long, value_enum)]
        family: Family,
        /// Vertex count (side length for grid).
        #[arg(long)]
        size: usize,
        /// Degree for random-regular.
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Seed for random families.
        #[arg(long, env = "LOCALFLOW_SEED", default_value_t = 0)]
        seed: u64,
        /// Cost model applied to every edge, as JSON.
        #[arg(long, default_value = r#"{"kind":"quadratic","a":1.0,"c":0.0}"#)]
        costs: String,
        /// Output path (stdout if omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Solve a graph file exactly and report KKT residuals plus the
    /// spectral summary.
    Solve {
        /// Graph JSON file.
        input: PathBuf,
        /// Solve tolerance.
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
        /// Output path (stdout if omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Apply a balanced perturbation, re-solve only a ball around its
    /// anchor, and report measured vs. predicted bias/variance.
    Perturb {
        /// Graph JSON file.
        input: PathBuf,
        /// Perturbation as JSON `{"vertex_id": value, ...}`; must balance.
        #[arg(long)]
        perturb: String,
        /// Ball radius around the anchor.
        #[arg(long, default_value_t = 1)]
        radius: usize,
        /// Localized projected-gradient iterations.
        #[arg(long, default_value_t = 10)]
        iters: usize,
        /// Anchor vertex id (defaults to the first perturbed vertex).
        #[arg(long)]
        anchor: Option<u64>,
        /// Reference solve tolerance.
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
        /// Output path (stdout if omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the full identity suite on a graph file: algebraic identities,
    /// series agreement, a seeded Monte Carlo walk check, and interlacing.
    Verify {
        /// Graph JSON file.
        input: PathBuf,
        /// Tolerance on the worst identity residual.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Seed for the Monte Carlo walk check.
        #[arg(long, env = "LOCALFLOW_SEED", default_value_t = 0)]
        seed: u64,
        /// Output path (stdout if omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Evaluate the localized re-solve over a grid of sizes, radii, and
    /// iteration counts; emit one CSV row per cell.
    Sweep {
        /// Graph family.
        #[arg(long, value_enum, default_value_t = Family::RandomRegular)]
        family: Family,
        /// Instance sizes.
        #[arg(long, value_delimiter = ',', default_value = "8,12")]
        sizes: Vec<usize>,
        /// Degree for random-regular.
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Seed for random families.
        #[arg(long, env = "LOCALFLOW_SEED", default_value_t = 0)]
        seed: u64,
        /// Ball radii to sweep.
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        radius: Vec<usize>,
        /// Iteration counts to sweep.
        #[arg(long, value_delimiter = ',', default_value = "0,5")]
        iters: Vec<usize>,
        /// Accuracy target echoed into the CSV; with `--tuned`, the target
        /// the tuned (radius, iterations) pair must certify.
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        /// Work-model exponent for the tuned complexity estimate.
        #[arg(long, default_value_t = 3.0)]
        omega: f64,
        /// Ignore the radius/iters grid; derive both from the tuning rule
        /// at the given epsilon (one row per size).
        #[arg(long, default_value_t = false)]
        tuned: bool,
        /// Cost model applied to every edge, as JSON.
        #[arg(long, default_value = r#"{"kind":"quadratic","a":1.0,"c":0.0}"#)]
        costs: String,
        /// Reference solve tolerance.
        #[arg(long, default_value_t = 1e-11)]
        tol: f64,
        /// Output path (stdout if omitted).
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Runs a parsed command. Returns the classified failure (if any); output
/// is written to the requested path or stdout before tolerance failures
/// are raised, so reports survive a nonzero exit.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate {
            family,
            size,
            k,
            seed,
            costs,
            output,
        } => {
            let text = cmd_generate(family, size, k, seed, &costs)?;
            emit(output.as_deref(), &text)
        }
        Command::Solve { input, tol, output } => {
            let text = cmd_solve(&input, tol)?;
            emit(output.as_deref(), &text)
        }
        Command::Perturb {
            input,
            perturb,
            radius,
            iters,
            anchor,
            tol,
            output,
        } => {
            let text = cmd_perturb(&input, &perturb, radius, iters, anchor, tol)?;
            emit(output.as_deref(), &text)
        }
        Command::Verify {
            input,
            tol,
            seed,
            output,
        } => {
            let (text, pass, worst) = cmd_verify(&input, tol, seed)?;
            emit(output.as_deref(), &text)?;
            if pass {
                Ok(())
            } else {
                Err(CliError::tolerance(format!(
                    "identity suite failed: worst residual {worst:e} exceeds tolerance {tol:e}"
                )))
            }
        }
        Command::Sweep {
            family,
            sizes,
            k,
            seed,
            radius,
            iters,
            epsilon,
            omega,
            tuned,
            costs,
            tol,
            output,
        } => {
            let text = cmd_sweep(SweepArgs {
                family,
                sizes,
                k,
                seed,
                radius,
                iters,
                epsilon,
                omega,
                tuned,
                costs,
                tol,
            })?;
            emit(output.as_deref(), &text)
        }
    }
}

fn emit(output: Option<&std::path::Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::validation(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_cost(costs: &str) -> Result<CostModel, CliError> {
    serde_json::from_str(costs)
        .map_err(|e| CliError::validation(format!("invalid cost model {costs:?}: {e}")))
}

/// `generate`: build a family instance and print its graph file.
pub fn cmd_generate(
    family: Family,
    size: usize,
    k: usize,
    seed: u64,
    costs: &str,
) -> Result<String, CliError> {
    let cost = parse_cost(costs)?;
    let problem = family.build(size, k, seed, &cost)?;
    Ok(io::to_json_string(&GraphFile::from_problem(&problem))?)
}

fn load(input: &std::path::Path) -> Result<(FlowProblem, IdTables), CliError> {
    let file = io::read_graph(input)?;
    Ok(file.to_problem()?)
}

/// `solve`: exact Newton solve, independent projected-gradient cross-check,
/// spectral summary.
pub fn cmd_solve(input: &std::path::Path, tol: f64) -> Result<String, CliError> {
    let (problem, tables) = load(input)?;
    let solution = solve_exact(&problem, tol)?;
    let pgd = pgd_solve(&problem, &PgdConfig::default(), tol, PGD_CROSS_CHECK_ITERS)?;
    let cross_check = (&solution.x - &pgd.x).norm();
    let op = sensitivity_operator(&problem, &solution)?;
    let walk = walk_data(&op)?;
    let report = spectral_report(&problem, &walk, None);
    let file = SolutionFile::new(&tables, &solution, cross_check, report);
    Ok(io::to_json_string(&file)?)
}

fn parse_perturbation(
    spec: &str,
    tables: &IdTables,
    n: usize,
) -> Result<DVector<f64>, CliError> {
    let map: BTreeMap<String, f64> = serde_json::from_str(spec)
        .map_err(|e| CliError::validation(format!("invalid perturbation {spec:?}: {e}")))?;
    let mut p = DVector::zeros(n);
    for (key, value) in map {
        let id: u64 = key
            .parse()
            .map_err(|_| CliError::validation(format!("perturbation key {key:?} is not a vertex id")))?;
        let idx = tables
            .vertex_index(id)
            .ok_or_else(|| CliError::validation(format!("perturbation vertex {id} is not listed")))?;
        p[idx] = value;
    }
    Ok(p)
}

/// `perturb`: localized re-solve on `ball(anchor, radius)` with the
/// measured-vs-bound error report.
pub fn cmd_perturb(
    input: &std::path::Path,
    perturb: &str,
    radius: usize,
    iters: usize,
    anchor: Option<u64>,
    tol: f64,
) -> Result<String, CliError> {
    let (problem, tables) = load(input)?;
    let n = problem.graph().n_vertices();
    let p = parse_perturbation(perturb, &tables, n)?;
    let anchor_idx = match anchor {
        Some(id) => tables
            .vertex_index(id)
            .ok_or_else(|| CliError::validation(format!("anchor vertex {id} is not listed")))?,
        None => (0..n)
            .find(|&v| p[v] != 0.0)
            .ok_or_else(|| CliError::validation("perturbation must be nonzero"))?,
    };
    let solution = solve_exact(&problem, tol)?;
    let sub = problem.graph().ball(anchor_idx, radius);
    let report =
        measure_decomposition(&problem, &solution, &p, &sub, iters, &PgdConfig::default())?;
    Ok(io::to_json_string(&report)?)
}

/// Monte Carlo cross-check block of the verify report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MonteCarloCheck {
    /// Walk count.
    pub walks: usize,
    /// RNG seed.
    pub seed: u64,
    /// Start, target, and absorbing vertex (dense indices).
    pub start: usize,
    /// Target vertex.
    pub target: usize,
    /// Absorbing vertex.
    pub absorbed_at: usize,
    /// Closed-form probability of hitting the target before absorption.
    pub hit_probability_exact: f64,
    /// Simulated estimate.
    pub hit_probability_simulated: f64,
    /// Standard error of the estimate.
    pub hit_probability_se: f64,
    /// Closed-form expected visits to the target before absorption.
    pub expected_visits_exact: f64,
    /// Simulated estimate.
    pub expected_visits_simulated: f64,
    /// Standard error of the estimate.
    pub expected_visits_se: f64,
    /// Whether both estimates fall within three standard errors.
    pub pass: bool,
}

/// Interlacing cross-check block of the verify report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InterlacingCheck {
    /// Induced balls examined.
    pub subgraphs: usize,
    /// Worst violation of the two-sided eigenvalue intervals and the scalar
    /// contraction bound (zero when everything holds).
    pub max_violation: f64,
    /// Whether no violation exceeded the numerical slack.
    pub pass: bool,
}

/// Output of `verify`: the identity residual suite plus the stochastic and
/// interlacing cross-checks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyReport {
    /// Tolerance the suite was held to.
    pub tolerance: f64,
    /// Walk contraction factor.
    pub lambda: f64,
    /// Per-identity worst residuals.
    pub residuals: crate::spectral::IdentityResiduals,
    /// Largest violation across the suite.
    pub worst: f64,
    /// Monte Carlo check (absent on graphs too small to host one).
    pub monte_carlo: Option<MonteCarloCheck>,
    /// Interlacing check (absent when no proper ball exists).
    pub interlacing: Option<InterlacingCheck>,
    /// Checks that were skipped and why (e.g. series checks on
    /// non-contractive walks).
    pub skipped: Vec<String>,
    /// Overall verdict.
    pub pass: bool,
}

fn monte_carlo_check(
    op: &crate::sensitivity::SensitivityOperator,
    walk: &WalkData,
    seed: u64,
) -> Result<Option<MonteCarloCheck>, CliError> {
    let n = walk.n();
    if n < 3 {
        return Ok(None);
    }
    let (start, target, absorbed_at) = (0, 1, n - 1);
    let killed = killed_walk(op, absorbed_at)?;
    let hit_exact = hitting_probability(&killed, start, target)?;
    let degrees_idx = killed
        .index_of(target)
        .expect("target survives absorption");
    let visits_exact = killed.degrees[degrees_idx] * killed.green_entry(start, target)?;
    let sim = simulate_killed_walk(walk, start, target, absorbed_at, VERIFY_WALKS, seed)?;
    let hit_ok =
        (sim.hit_probability - hit_exact).abs() <= 3.0 * sim.hit_se + 1e-9;
    let visits_ok =
        (sim.expected_visits - visits_exact).abs() <= 3.0 * sim.visits_se + 1e-9;
    Ok(Some(MonteCarloCheck {
        walks: sim.walks,
        seed,
        start,
        target,
        absorbed_at,
        hit_probability_exact: hit_exact,
        hit_probability_simulated: sim.hit_probability,
        hit_probability_se: sim.hit_se,
        expected_visits_exact: visits_exact,
        expected_visits_simulated: sim.expected_visits,
        expected_visits_se: sim.visits_se,
        pass: hit_ok && visits_ok,
    }))
}

fn interlacing_check(
    problem: &FlowProblem,
    op: &crate::sensitivity::SensitivityOperator,
) -> Result<Option<InterlacingCheck>, CliError> {
    let graph = problem.graph();
    let n = graph.n_vertices();
    let (host_mu_list, host_mu) = graph.adjacency_spectrum();
    let mut anchors = vec![0, n / 2, n - 1];
    anchors.sort_unstable();
    anchors.dedup();
    let mut subgraphs = 0_usize;
    let mut max_violation = 0.0_f64;
    for anchor in anchors {
        let sub = graph.ball(anchor, 1);
        if sub.is_whole() || sub.edges().is_empty() {
            continue;
        }
        let eigs = subgraph_walk_eigenvalues(op, &sub)?;
        let m = sub.vertices().len();
        let (k_min, k_max) = sub.degree_bounds();
        let (mut w_min, mut w_max) = (f64::INFINITY, f64::NEG_INFINITY);
        for &e in sub.edges() {
            let w = op.sigma[e];
            w_min = w_min.min(w);
            w_max = w_max.max(w);
        }
        for (i, &eig) in eigs.iter().enumerate() {
            let (lo, hi) = interlacing_interval(
                i,
                n,
                m,
                &host_mu_list,
                w_min,
                w_max,
                k_min as f64,
                k_max as f64,
            );
            max_violation = max_violation.max(lo - eig).max(eig - hi);
        }
        if m >= 2 {
            let lambda_sub = eigs[1].abs().max(eigs[m - 1].abs());
            let bound =
                interlacing_bound(k_min as f64, k_max as f64, w_min, w_max, host_mu);
            max_violation = max_violation.max(lambda_sub - bound);
        }
        subgraphs += 1;
    }
    if subgraphs == 0 {
        return Ok(None);
    }
    Ok(Some(InterlacingCheck {
        subgraphs,
        max_violation,
        pass: max_violation <= 1e-9,
    }))
}

/// `verify`: run every identity check on one graph. Returns the report
/// text, the verdict, and the worst residual.
pub fn cmd_verify(
    input: &std::path::Path,
    tol: f64,
    seed: u64,
) -> Result<(String, bool, f64), CliError> {
    let (problem, _tables) = load(input)?;
    let solution = solve_exact(&problem, 1e-12)?;
    let op = sensitivity_operator(&problem, &solution)?;
    let walk = walk_data(&op)?;
    let residuals = identity_residuals(&problem, &op, &walk)?;
    let mut skipped = Vec::new();
    if residuals.green_series.is_none() {
        skipped.push("green_series: skipped: λ=1".to_string());
    }
    if residuals.sum_over_z.is_none() {
        skipped.push("sum_over_z: skipped: λ=1".to_string());
    }
    if residuals.spectral_bound_excess.is_none() && !walk.is_contractive() {
        skipped.push("spectral_bound: skipped: λ=1".to_string());
    }
    let monte_carlo = monte_carlo_check(&op, &walk, seed)?;
    let interlacing = interlacing_check(&problem, &op)?;
    let worst = residuals.worst();
    let pass = worst <= tol
        && monte_carlo.as_ref().map_or(true, |m| m.pass)
        && interlacing.as_ref().map_or(true, |i| i.pass);
    let report = VerifyReport {
        tolerance: tol,
        lambda: walk.lambda,
        residuals,
        worst,
        monte_carlo,
        interlacing,
        skipped,
        pass,
    };
    Ok((io::to_json_string(&report)?, pass, worst))
}

struct SweepArgs {
    family: Family,
    sizes: Vec<usize>,
    k: usize,
    seed: u64,
    radius: Vec<usize>,
    iters: Vec<usize>,
    epsilon: f64,
    omega: f64,
    tuned: bool,
    costs: String,
    tol: f64,
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `sweep`: one CSV row per (size, radius, iterations) cell. The
/// perturbation is always the unit dipole `(e_anchor - e_neighbor)/sqrt(2)`
/// at vertex 0; with `--tuned`, the grid is replaced by the tuned pair for
/// the requested accuracy.
fn cmd_sweep(args: SweepArgs) -> Result<String, CliError> {
    // Validate the work-model exponent up front, whether or not the tuned
    // path runs.
    complexity_estimate(1.0, 0, args.omega)?;
    let cost = parse_cost(&args.costs)?;
    let mut csv = String::from("n,r,t,epsilon,bias_meas,bias_bound,var_meas,var_bound,error,rho\n");
    for &size in &args.sizes {
        let problem = args.family.build(size, args.k, args.seed, &cost)?;
        let n = problem.graph().n_vertices();
        let anchor = 0;
        let neighbor = problem.graph().neighbors(anchor)[0];
        let mut p = DVector::zeros(n);
        p[anchor] = std::f64::consts::FRAC_1_SQRT_2;
        p[neighbor] = -std::f64::consts::FRAC_1_SQRT_2;
        let solution = solve_exact(&problem, args.tol)?;
        let cells: Vec<(usize, usize)> = if args.tuned {
            let params = DecayParams::from_problem(&problem);
            let tuning = tune(args.epsilon, p.norm(), &params, 1)?;
            eprintln!(
                "n={n}: tuned radius={} iterations={} complexity={}",
                tuning.radius,
                tuning.iterations,
                complexity_estimate(
                    (params.k_max as f64).powi(tuning.radius as i32),
                    tuning.iterations,
                    args.omega,
                )?
            );
            vec![(tuning.radius, tuning.iterations)]
        } else {
            args.radius
                .iter()
                .flat_map(|&r| args.iters.iter().map(move |&t| (r, t)))
                .collect()
        };
        for (r, t) in cells {
            let sub = problem.graph().ball(anchor, r);
            let report =
                measure_decomposition(&problem, &solution, &p, &sub, t, &PgdConfig::default())?;
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                n,
                r,
                t,
                args.epsilon,
                report.bias_measured,
                fmt_opt(report.bias_bound),
                report.variance_measured,
                fmt_opt(report.variance_bound),
                report.error_measured,
                report.rho,
            ));
        }
    }
    Ok(csv)
}
