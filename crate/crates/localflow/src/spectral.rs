//! The random-walk view of sensitivity: reversible walks on the weighted
//! graph, killed walks and their Green functions, and the geometric decay
//! bounds that make localized re-solving possible.
//!
//! The weighted Laplacian `L = Deg - W` from [`crate::sensitivity`] induces
//! the transition matrix `P = Deg⁻¹ W` of a reversible random walk. Its
//! pseudoinverse - the heart of the sensitivity operator - expands into a
//! geometric series of walk steps:
//!
//! ```text
//! (e_u - e_v)ᵀ L⁺ (e_w - e_z) = sum_t (e_u - e_v)ᵀ Pᵗ (e_w/d_w - e_z/d_z)
//! ```
//!
//! so the influence of a perturbation at distance `d` is carried only by
//! walk paths of length at least `d`, and those contribute at most
//! `lambda^d` with `lambda = max(|lambda_2|, |lambda_n|)` the walk's
//! contraction factor. This module evaluates both sides of such identities
//! (series- and pseudoinverse-based), builds killed walks with one absorbing
//! vertex, simulates them for Monte Carlo cross-checks, and turns the decay
//! statement into computable bounds with explicit constants, either at the
//! current flow or conservatively over every flow via degree-based
//! eigenvalue interlacing.
//!
//! Bipartite structures make the walk periodic (`lambda = 1`); every
//! series-based operation then returns a typed error rather than a silently
//! divergent sum.

use nalgebra::{DMatrix, DVector, RowDVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Subgraph;
use crate::sensitivity::{FlowProblem, SensitivityOperator};

/// Walks with `lambda` above this threshold are treated as non-contractive.
pub const CONTRACTIVE_THRESHOLD: f64 = 1.0 - 1e-9;

/// Default tail tolerance for truncating walk series.
pub const SERIES_TAIL_TOL: f64 = 1e-10;

/// Default seed for the Monte Carlo walk simulator.
pub const DEFAULT_MC_SEED: u64 = 0x10ca1f10;

/// Errors from walk construction and spectral queries.
#[derive(Debug, Error)]
pub enum SpectralError {
    /// The walk does not contract (`lambda >= 1`); series diverge.
    ///
    /// Bipartite graphs (paths, even cycles, grids) always land here: their
    /// walks are periodic regardless of the weights.
    #[error("walk is not contractive (lambda = {lambda}); series-based evaluation is undefined")]
    NonContractive {
        /// The offending contraction factor.
        lambda: f64,
    },
    /// A vertex id outside the graph, or equal to the absorbing vertex
    /// where that is not allowed.
    #[error("invalid vertex {v}: {why}")]
    InvalidVertex {
        /// The offending vertex.
        v: usize,
        /// What went wrong.
        why: &'static str,
    },
    /// A subgraph without edges has no walk.
    #[error("subgraph has no edges; its walk is undefined")]
    NoEdges,
    /// An internal stochastic-structure check failed.
    #[error("walk data inconsistent: {what} (residual {residual:e})")]
    Inconsistent {
        /// Which invariant failed.
        what: &'static str,
        /// Residual magnitude.
        residual: f64,
    },
    /// The restricted (killed) system could not be inverted or verified.
    #[error("killed-walk Green verification failed (residual {residual:e})")]
    GreenMismatch {
        /// Max entry disagreement between the two evaluation paths.
        residual: f64,
    },
}

/// The reversible random walk induced by a weighted graph: transition
/// matrix `P = Deg⁻¹ W`, stationary distribution, and spectrum.
#[derive(Debug, Clone)]
pub struct WalkData {
    /// Row-stochastic transition matrix.
    pub p: DMatrix<f64>,
    /// Weighted degrees (the row sums of `W`).
    pub degrees: DVector<f64>,
    /// Stationary distribution `pi_v = d_v / sum(d)`.
    pub stationary: DVector<f64>,
    /// Eigenvalues of the symmetrized walk, sorted descending; the first
    /// is always 1.
    pub eigenvalues: Vec<f64>,
    /// Contraction factor `max(|lambda_2|, |lambda_n|)`.
    pub lambda: f64,
}

impl WalkData {
    /// Whether geometric series in this walk converge.
    pub fn is_contractive(&self) -> bool {
        self.lambda < CONTRACTIVE_THRESHOLD
    }

    /// Number of vertices.
    pub fn n(&self) -> usize {
        self.p.nrows()
    }

    /// Smallest weighted degree.
    pub fn min_degree(&self) -> f64 {
        self.degrees.min()
    }

    /// Truncation horizon `T` such that the series tail beyond `T` is below
    /// `tail_tol`: the tail of `sum_t (e_u - e_v)ᵀ Pᵗ (e_w/d_w - e_z/d_z)`
    /// is at most `2 lambda^(T+1) / ((1 - lambda) min_d)`.
    pub fn series_horizon(&self, tail_tol: f64) -> Result<usize, SpectralError> {
        if !self.is_contractive() {
            return Err(SpectralError::NonContractive {
                lambda: self.lambda,
            });
        }
        let rhs = tail_tol * (1.0 - self.lambda) * self.min_degree() / 2.0;
        if rhs >= self.lambda || self.lambda <= 0.0 {
            return Ok(0);
        }
        let t_plus_1 = (rhs.ln() / self.lambda.ln()).ceil() as usize;
        Ok(t_plus_1.saturating_sub(1))
    }
}

/// Builds the walk induced by a sensitivity operator's weighted graph.
///
/// Verifies row-stochasticity, stationarity of `pi`, and that the leading
/// symmetrized eigenvalue is 1.
pub fn walk_data(op: &SensitivityOperator) -> Result<WalkData, SpectralError> {
    let n = op.degrees.len();
    let mut p = op.weights.clone();
    for v in 0..n {
        let d = op.degrees[v];
        if d <= 0.0 {
            return Err(SpectralError::Inconsistent {
                what: "vertex with zero weighted degree",
                residual: d,
            });
        }
        for w in 0..n {
            p[(v, w)] /= d;
        }
    }
    let row_residual = p
        .row_iter()
        .map(|r| (r.sum() - 1.0).abs())
        .fold(0.0_f64, f64::max);
    if row_residual > 1e-12 {
        return Err(SpectralError::Inconsistent {
            what: "transition rows must sum to 1",
            residual: row_residual,
        });
    }
    let total: f64 = op.degrees.iter().sum();
    let stationary = &op.degrees / total;
    let stat_residual = (p.tr_mul(&stationary) - &stationary).amax();
    if stat_residual > 1e-12 {
        return Err(SpectralError::Inconsistent {
            what: "pi P = pi",
            residual: stat_residual,
        });
    }
    // Symmetrization Gamma = D^(1/2) P D^(-1/2) = D^(-1/2) W D^(-1/2) shares
    // P's eigenvalues and admits a stable symmetric eigensolve.
    let d_isqrt = DVector::from_iterator(n, op.degrees.iter().map(|d| 1.0 / d.sqrt()));
    let mut gamma = op.weights.clone();
    for v in 0..n {
        for w in 0..n {
            gamma[(v, w)] *= d_isqrt[v] * d_isqrt[w];
        }
    }
    let mut eigenvalues: Vec<f64> = gamma
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigenvalues.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    if (eigenvalues[0] - 1.0).abs() > 1e-10 {
        return Err(SpectralError::Inconsistent {
            what: "leading walk eigenvalue must be 1",
            residual: (eigenvalues[0] - 1.0).abs(),
        });
    }
    let lambda = if n >= 2 {
        eigenvalues[1].abs().max(eigenvalues[n - 1].abs())
    } else {
        0.0
    };
    Ok(WalkData {
        p,
        degrees: op.degrees.clone(),
        stationary,
        eigenvalues,
        lambda,
    })
}

/// The truncated walk series `sum_{t=0}^{T} (e_u - e_v)ᵀ Pᵗ`, as a vector
/// indexed by vertices. `T` is chosen so the discarded tail of any Green
/// difference built from this row is below [`SERIES_TAIL_TOL`].
///
/// The difference row is orthogonal to the stationary direction, so the
/// series contracts at rate `lambda` even though `sum_t Pᵗ` itself diverges.
pub fn walk_series_row(
    walk: &WalkData,
    u: usize,
    v: usize,
) -> Result<DVector<f64>, SpectralError> {
    let n = walk.n();
    for x in [u, v] {
        if x >= n {
            return Err(SpectralError::InvalidVertex {
                v: x,
                why: "outside the graph",
            });
        }
    }
    let horizon = walk.series_horizon(SERIES_TAIL_TOL)?;
    let mut row = RowDVector::zeros(n);
    row[u] += 1.0;
    row[v] -= 1.0;
    let mut acc = row.clone();
    for _ in 0..horizon {
        row *= &walk.p;
        acc += &row;
    }
    Ok(acc.transpose())
}

/// The truncated resolvent of the centered propagator,
/// `sum_{t=0}^{T} (P - 1 piᵀ)ᵗ`.
///
/// `sum_t Pᵗ` itself diverges, but subtracting the stationary projector
/// leaves powers that shrink at rate `lambda`, and any difference
/// functional `(e_u - e_v)ᵀ` applied to the resolvent reproduces the raw
/// series exactly (the stationary parts cancel). One matrix holds every
/// `(u, v)` pair at once, which is how the all-tuples identity checks stay
/// affordable.
pub fn centered_resolvent(walk: &WalkData) -> Result<DMatrix<f64>, SpectralError> {
    let horizon = walk.series_horizon(SERIES_TAIL_TOL)?;
    let n = walk.n();
    let k = &walk.p - DVector::repeat(n, 1.0) * walk.stationary.transpose();
    let mut acc = DMatrix::identity(n, n);
    let mut power = DMatrix::identity(n, n);
    for _ in 0..horizon {
        power *= &k;
        acc += &power;
    }
    Ok(acc)
}

/// Evaluates the localized quadratic-form bound: for vertex sets `U`, `Z`
/// and values `f` on `Z`, returns the pair `(lhs, bound)` with
///
/// ```text
/// lhs   = sqrt( 1/2 sum_{u,v in U adjacent} g_uv^2 ),
/// g_uv  = sum_z sum_t (Pᵗ_uz - Pᵗ_vz) f_z,
/// bound = alpha * lambda^d(U,Z) / (1 - lambda) * sqrt(sum_z f_z^2 d_z),
/// alpha = max_{u in U} sqrt(2 |N(u) ∩ U|) / min_{u in U} sqrt(d_u).
/// ```
///
/// The bound always dominates the measured form on contractive walks; the
/// pair is returned so callers can assert exactly that.
pub fn spectral_bound_pair(
    problem: &FlowProblem,
    walk: &WalkData,
    u: &[usize],
    z: &[usize],
    f: &[f64],
) -> Result<(f64, f64), SpectralError> {
    let graph = problem.graph();
    let n = walk.n();
    if z.len() != f.len() || z.is_empty() || u.is_empty() {
        return Err(SpectralError::InvalidVertex {
            v: usize::MAX,
            why: "U and Z must be nonempty and f must match Z",
        });
    }
    for &x in u.iter().chain(z) {
        if x >= n {
            return Err(SpectralError::InvalidVertex {
                v: x,
                why: "outside the graph",
            });
        }
    }
    let resolvent = centered_resolvent(walk)?;
    let mut f_ext = DVector::zeros(n);
    for (&zv, &fz) in z.iter().zip(f) {
        f_ext[zv] += fz;
    }
    let s = &resolvent * &f_ext;

    let in_u = {
        let mut mask = vec![false; n];
        for &v in u {
            mask[v] = true;
        }
        mask
    };
    let mut sum_sq = 0.0;
    for &a in u {
        for &b in graph.neighbors(a) {
            if b > a && in_u[b] {
                let g = s[a] - s[b];
                sum_sq += g * g;
            }
        }
    }
    let lhs = sum_sq.sqrt();

    let mut boundary_factor = 0.0_f64;
    let mut min_degree = f64::INFINITY;
    for &v in u {
        let inside = graph.neighbors(v).iter().filter(|&&w| in_u[w]).count();
        boundary_factor = boundary_factor.max((2.0 * inside as f64).sqrt());
        min_degree = min_degree.min(walk.degrees[v]);
    }
    let alpha = boundary_factor / min_degree.sqrt();
    let distance = graph
        .set_distance(u, z)
        .map_err(|_| SpectralError::InvalidVertex {
            v: usize::MAX,
            why: "set distance undefined",
        })?;
    let f_norm = z
        .iter()
        .zip(f)
        .map(|(&zv, &fz)| fz * fz * walk.degrees[zv])
        .sum::<f64>()
        .sqrt();
    let bound =
        alpha * walk.lambda.powi(distance as i32) / (1.0 - walk.lambda) * f_norm;
    Ok((lhs, bound))
}

/// Which evaluation path a Green difference should take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreenPath {
    /// Direct evaluation through the Laplacian pseudoinverse.
    Pseudoinverse,
    /// Truncated walk series (requires a contractive walk).
    Series,
}

/// The centered Green difference `(e_u - e_v)ᵀ L⁺ (e_w - e_z)`.
///
/// `Pseudoinverse` reads it off `L⁺`; `Series` evaluates the equivalent
/// walk sum `sum_t (e_u - e_v)ᵀ Pᵗ (e_w / d_w - e_z / d_z)`, truncated with
/// tail below [`SERIES_TAIL_TOL`]. The two agree on contractive walks.
pub fn green_difference(
    op: &SensitivityOperator,
    walk: &WalkData,
    path: GreenPath,
    u: usize,
    v: usize,
    w: usize,
    z: usize,
) -> Result<f64, SpectralError> {
    let n = walk.n();
    for x in [u, v, w, z] {
        if x >= n {
            return Err(SpectralError::InvalidVertex {
                v: x,
                why: "outside the graph",
            });
        }
    }
    match path {
        GreenPath::Pseudoinverse => {
            let lp = &op.laplacian_pinv;
            Ok(lp[(u, w)] - lp[(u, z)] - lp[(v, w)] + lp[(v, z)])
        }
        GreenPath::Series => {
            let row = walk_series_row(walk, u, v)?;
            Ok(row[w] / walk.degrees[w] - row[z] / walk.degrees[z])
        }
    }
}

/// A walk with one absorbing vertex removed from the system: the restricted
/// Laplacian, the surviving-walk transition matrix, and the Green function
/// (expected discounted visits) that ties them together.
#[derive(Debug, Clone)]
pub struct KilledWalkData {
    /// The absorbing vertex (removed row/column).
    pub z_bar: usize,
    /// Surviving vertex ids, ascending; row/column `i` of the restricted
    /// matrices refers to `vertices[i]`.
    pub vertices: Vec<usize>,
    /// Restricted weighted Laplacian (full Laplacian minus the `z_bar`
    /// row and column). Positive definite for connected graphs.
    pub restricted_laplacian: DMatrix<f64>,
    /// Restricted transition matrix `P̄` (rows may sum to less than 1;
    /// the deficit is the per-step absorption probability).
    pub restricted_transition: DMatrix<f64>,
    /// Green function `L̄⁻¹`; entry `(v, w)` is the expected visits to `w`
    /// from `v` before absorption, divided by `d_w`.
    pub green: DMatrix<f64>,
    /// Fundamental matrix `(I - P̄)⁻¹` (raw expected visit counts).
    pub fundamental: DMatrix<f64>,
    /// Weighted degrees of the surviving vertices (degrees in the full
    /// graph, including the weight of edges into the absorbing vertex).
    pub degrees: DVector<f64>,
}

impl KilledWalkData {
    /// Position of vertex `v` among the surviving vertices.
    pub fn index_of(&self, v: usize) -> Option<usize> {
        self.vertices.binary_search(&v).ok()
    }

    /// Green entry by original vertex ids.
    pub fn green_entry(&self, v: usize, w: usize) -> Result<f64, SpectralError> {
        let (i, j) = self.pair(v, w)?;
        Ok(self.green[(i, j)])
    }

    /// Expected number of visits to `w` (counting time 0) before absorption
    /// for a walk started at `w`: `d_w * green[w, w]`.
    pub fn expected_visits(&self, w: usize) -> Result<f64, SpectralError> {
        let (i, j) = self.pair(w, w)?;
        Ok(self.degrees[i] * self.green[(i, j)])
    }

    fn pair(&self, v: usize, w: usize) -> Result<(usize, usize), SpectralError> {
        let i = self.index_of(v).ok_or(SpectralError::InvalidVertex {
            v,
            why: "absorbed or outside the graph",
        })?;
        let j = self.index_of(w).ok_or(SpectralError::InvalidVertex {
            v: w,
            why: "absorbed or outside the graph",
        })?;
        Ok((i, j))
    }
}

/// Builds the killed walk for absorbing vertex `z_bar` and verifies the
/// Green identity `L̄⁻¹ = (I - P̄)⁻¹ Deg⁻¹` entrywise to `1e-10`.
pub fn killed_walk(
    op: &SensitivityOperator,
    z_bar: usize,
) -> Result<KilledWalkData, SpectralError> {
    let n = op.degrees.len();
    if z_bar >= n {
        return Err(SpectralError::InvalidVertex {
            v: z_bar,
            why: "outside the graph",
        });
    }
    let vertices: Vec<usize> = (0..n).filter(|&v| v != z_bar).collect();
    let m = vertices.len();
    let mut lbar = DMatrix::zeros(m, m);
    let mut pbar = DMatrix::zeros(m, m);
    let mut degrees = DVector::zeros(m);
    for (i, &v) in vertices.iter().enumerate() {
        degrees[i] = op.degrees[v];
        for (j, &w) in vertices.iter().enumerate() {
            lbar[(i, j)] = op.laplacian[(v, w)];
            pbar[(i, j)] = op.weights[(v, w)] / op.degrees[v];
        }
    }
    let green = lbar
        .clone()
        .cholesky()
        .ok_or(SpectralError::Inconsistent {
            what: "restricted Laplacian must be positive definite",
            residual: f64::NAN,
        })?
        .inverse();
    let fundamental =
        (DMatrix::identity(m, m) - &pbar)
            .try_inverse()
            .ok_or(SpectralError::Inconsistent {
                what: "I - restricted transition must be invertible",
                residual: f64::NAN,
            })?;
    // Green identity: L̄⁻¹ = (I - P̄)⁻¹ Deḡ⁻¹ (visits scaled by target degree).
    let mut via_walk = fundamental.clone();
    for j in 0..m {
        for i in 0..m {
            via_walk[(i, j)] /= degrees[j];
        }
    }
    let residual = (&green - &via_walk).amax();
    if residual > 1e-10 * green.amax().max(1.0) {
        return Err(SpectralError::GreenMismatch { residual });
    }
    Ok(KilledWalkData {
        z_bar,
        vertices,
        restricted_laplacian: lbar,
        restricted_transition: pbar,
        green,
        fundamental,
        degrees,
    })
}

/// Probability that the walk from `v` reaches `w` before the absorbing
/// vertex: `green[v, w] / green[w, w]`. Always in `[0, 1]`.
pub fn hitting_probability(
    killed: &KilledWalkData,
    v: usize,
    w: usize,
) -> Result<f64, SpectralError> {
    let gvw = killed.green_entry(v, w)?;
    let gww = killed.green_entry(w, w)?;
    Ok(gvw / gww)
}

/// The restricted evaluation of the full pseudoinverse:
/// `M[i, j] = (e_vi - e_zbar)ᵀ L⁺ (e_vj - e_zbar)` over surviving vertices.
///
/// Equals the killed-walk Green function `L̄⁻¹` exactly; comparing the two
/// is the standard cross-check between the absorbing-walk picture and the
/// pseudoinverse picture.
pub fn pinv_via_restricted(
    op: &SensitivityOperator,
    z_bar: usize,
) -> Result<DMatrix<f64>, SpectralError> {
    let n = op.degrees.len();
    if z_bar >= n {
        return Err(SpectralError::InvalidVertex {
            v: z_bar,
            why: "outside the graph",
        });
    }
    let vertices: Vec<usize> = (0..n).filter(|&v| v != z_bar).collect();
    let lp = &op.laplacian_pinv;
    let m = vertices.len();
    let mut out = DMatrix::zeros(m, m);
    for (i, &v) in vertices.iter().enumerate() {
        for (j, &w) in vertices.iter().enumerate() {
            out[(i, j)] = lp[(v, w)] - lp[(v, z_bar)] - lp[(z_bar, w)] + lp[(z_bar, z_bar)];
        }
    }
    Ok(out)
}

/// Monte Carlo estimates from simulated killed walks.
#[derive(Debug, Clone)]
pub struct WalkSimulation {
    /// Number of simulated walks.
    pub walks: usize,
    /// Fraction of walks that reached `w` before absorption.
    pub hit_probability: f64,
    /// Standard error of `hit_probability`.
    pub hit_se: f64,
    /// Mean number of visits to `w` (counting time 0) before absorption.
    pub expected_visits: f64,
    /// Standard error of `expected_visits`.
    pub visits_se: f64,
}

/// Simulates `walks` killed random walks from `start`, absorbing at
/// `z_bar`, and tallies visits to `w`. Deterministic for a fixed seed.
pub fn simulate_killed_walk(
    walk: &WalkData,
    start: usize,
    w: usize,
    z_bar: usize,
    walks: usize,
    seed: u64,
) -> Result<WalkSimulation, SpectralError> {
    let n = walk.n();
    for x in [start, w, z_bar] {
        if x >= n {
            return Err(SpectralError::InvalidVertex {
                v: x,
                why: "outside the graph",
            });
        }
    }
    for x in [start, w] {
        if x == z_bar {
            return Err(SpectralError::InvalidVertex {
                v: x,
                why: "coincides with the absorbing vertex",
            });
        }
    }
    // Cumulative transition rows for inverse-CDF sampling.
    let cumulative: Vec<Vec<f64>> = (0..n)
        .map(|v| {
            let mut acc = 0.0;
            walk.p
                .row(v)
                .iter()
                .map(|&p| {
                    acc += p;
                    acc
                })
                .collect()
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0_usize;
    let mut visit_sum = 0.0_f64;
    let mut visit_sq_sum = 0.0_f64;
    for _ in 0..walks {
        let mut current = start;
        let mut visits = 0_u64;
        while current != z_bar {
            if current == w {
                visits += 1;
            }
            let r: f64 = rng.gen();
            let row = &cumulative[current];
            current = row
                .iter()
                .position(|&c| r < c)
                .unwrap_or(n - 1);
        }
        if visits > 0 {
            hits += 1;
        }
        visit_sum += visits as f64;
        visit_sq_sum += (visits * visits) as f64;
    }
    let nf = walks as f64;
    let hit_probability = hits as f64 / nf;
    let hit_se = (hit_probability * (1.0 - hit_probability) / nf).sqrt();
    let mean = visit_sum / nf;
    let variance = (visit_sq_sum / nf - mean * mean).max(0.0);
    Ok(WalkSimulation {
        walks,
        hit_probability,
        hit_se,
        expected_visits: mean,
        visits_se: (variance / nf).sqrt(),
    })
}

/// The degree-and-curvature eigenvalue bound
/// `(w_plus k_plus) / (w_minus k_minus) - 1 + (w_plus / (w_minus k_minus)) mu`.
///
/// With `w_minus = 1/beta`, `w_plus = 1/alpha` this bounds the contraction
/// factor of the weighted walk uniformly over all flows; it may exceed 1,
/// in which case no localization guarantee follows from it.
pub fn interlacing_bound(k_minus: f64, k_plus: f64, w_minus: f64, w_plus: f64, mu: f64) -> f64 {
    (w_plus * k_plus) / (w_minus * k_minus) - 1.0 + (w_plus / (w_minus * k_minus)) * mu
}

/// The two-sided interval guaranteed for the `i`-th (0-based, descending)
/// walk eigenvalue of a weighted subgraph on `m` of the `n` vertices:
/// adjacency eigenvalues of the host graph interlace those of the induced
/// submatrix, and degree bounds control the rest.
///
/// `k_minus`/`k_plus` must bound the degrees of the subgraph the walk
/// actually lives on; `mu` are the host adjacency eigenvalues, descending.
pub fn interlacing_interval(
    i: usize,
    n: usize,
    m: usize,
    mu: &[f64],
    w_minus: f64,
    w_plus: f64,
    k_minus: f64,
    k_plus: f64,
) -> (f64, f64) {
    assert!(m <= n && i < m, "eigenvalue index out of range");
    let lo = 1.0 - (w_plus * k_plus) / (w_minus * k_minus)
        + (w_plus / (w_minus * k_minus)) * mu[i + n - m];
    let hi = 1.0 - (w_minus * k_minus) / (w_plus * k_plus)
        + (w_minus / (w_plus * k_plus)) * mu[i];
    (lo, hi)
}

/// Walk eigenvalues of a weighted subgraph, descending: the walk uses the
/// sensitivity weights restricted to the subgraph's own edges, with degrees
/// summed inside the subgraph only.
pub fn subgraph_walk_eigenvalues(
    op: &SensitivityOperator,
    sub: &Subgraph<'_>,
) -> Result<Vec<f64>, SpectralError> {
    if sub.edges().is_empty() {
        return Err(SpectralError::NoEdges);
    }
    let verts = sub.vertices();
    let m = verts.len();
    let pos = |v: usize| verts.binary_search(&v).unwrap();
    let mut w = DMatrix::zeros(m, m);
    for &e in sub.edges() {
        let edge = sub.parent().edges()[e];
        let weight = op.weights[(edge.tail, edge.head)];
        let (i, j) = (pos(edge.tail), pos(edge.head));
        w[(i, j)] = weight;
        w[(j, i)] = weight;
    }
    let degrees: Vec<f64> = (0..m).map(|i| w.row(i).sum()).collect();
    if degrees.iter().any(|&d| d <= 0.0) {
        return Err(SpectralError::NoEdges);
    }
    let mut gamma = w;
    for i in 0..m {
        for j in 0..m {
            gamma[(i, j)] /= (degrees[i] * degrees[j]).sqrt();
        }
    }
    let mut eigs: Vec<f64> = gamma
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eigs.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    Ok(eigs)
}

/// A geometric decay bound on the localized sensitivity norm, in both an
/// evaluated-at-the-current-flow form and a conservative
/// uniform-over-all-flows form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayBound {
    /// Hop distance between the subgraph's vertex set and the perturbation
    /// support.
    pub distance: usize,
    /// Contraction factor of the walk at the current flow.
    pub lambda: f64,
    /// Leading constant evaluated at the current flow.
    pub c_evaluated: f64,
    /// Bound `c lambda^d / (1 - lambda) * ||p||_Z` at the current flow.
    pub evaluated: f64,
    /// Conservative contraction bound from curvature and degree bounds
    /// (may be >= 1, in which case no conservative bound exists).
    pub rho: f64,
    /// Leading constant with weights bracketed by `[1/beta, 1/alpha]`.
    pub c_conservative: f64,
    /// Conservative bound, `None` when `rho >= 1`.
    pub conservative: Option<f64>,
}

/// Bounds `||dx*/deps||` restricted to the subgraph's edges, for any
/// perturbation direction supported on `z` with localized norm
/// `p_norm_on_z`, by `c * lambda^d / (1 - lambda) * p_norm_on_z`.
///
/// The evaluated mode uses the walk at the current flow; the conservative
/// mode replaces `lambda` by the interlacing bound `rho` and brackets the
/// weights by the curvature sandwich, making it valid at every flow (when
/// `rho < 1`). Errors when the current walk itself does not contract.
pub fn decay_bound(
    problem: &FlowProblem,
    op: &SensitivityOperator,
    walk: &WalkData,
    sub: &Subgraph<'_>,
    z: &[usize],
    p_norm_on_z: f64,
) -> Result<DecayBound, SpectralError> {
    if !walk.is_contractive() {
        return Err(SpectralError::NonContractive {
            lambda: walk.lambda,
        });
    }
    let graph = problem.graph();
    let u = sub.vertices();
    let distance = graph
        .set_distance(u, z)
        .map_err(|_| SpectralError::InvalidVertex {
            v: usize::MAX,
            why: "perturbation support must be a nonempty vertex set",
        })?;

    // max over U of sqrt(2 |N(v) ∩ U|), neighborhoods in the full graph.
    let mut boundary_factor = 0.0_f64;
    for &v in u {
        let inside = graph
            .neighbors(v)
            .iter()
            .filter(|&&w| sub.contains_vertex(w))
            .count();
        boundary_factor = boundary_factor.max((2.0 * inside as f64).sqrt());
    }
    // Largest weight on an edge with both endpoints in U, and smallest
    // full-graph weighted degree over U.
    let mut max_weight = 0.0_f64;
    for &v in u {
        for &w in graph.neighbors(v) {
            if sub.contains_vertex(w) {
                max_weight = max_weight.max(op.weights[(v, w)]);
            }
        }
    }
    let min_weighted_degree = u
        .iter()
        .map(|&v| op.degrees[v])
        .fold(f64::INFINITY, f64::min);

    let c_evaluated = boundary_factor / min_weighted_degree * max_weight;
    let evaluated =
        c_evaluated * walk.lambda.powi(distance as i32) / (1.0 - walk.lambda) * p_norm_on_z;

    // Conservative mode: weights in [1/beta, 1/alpha], hop degrees of the
    // full graph, host adjacency mu.
    let (alpha, beta) = problem.curvature_bounds();
    let (k_min, k_max) = graph.degree_bounds();
    let (_, mu) = graph.adjacency_spectrum();
    let rho = interlacing_bound(k_min as f64, k_max as f64, 1.0 / beta, 1.0 / alpha, mu);
    let min_hop_degree = u
        .iter()
        .map(|&v| graph.degree(v))
        .min()
        .unwrap_or(0) as f64;
    let c_conservative = boundary_factor * (1.0 / alpha) / ((1.0 / beta) * min_hop_degree);
    let conservative = if rho < 1.0 {
        Some(c_conservative * rho.powi(distance as i32) / (1.0 - rho) * p_norm_on_z)
    } else {
        None
    };

    Ok(DecayBound {
        distance,
        lambda: walk.lambda,
        c_evaluated,
        evaluated,
        rho,
        c_conservative,
        conservative,
    })
}

/// Worst-case residuals of the walk/Laplacian identity suite on one solved
/// flow. Series-based entries are `None` on non-contractive walks, where
/// those identities are undefined; the algebraic entries are always
/// checked.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityResiduals {
    /// Moore-Penrose residual of `L⁺`: worst of the two defining
    /// identities, relative to the matrix scale.
    pub pseudoinverse: f64,
    /// `max |green * L_restricted - I|` over every absorbing vertex.
    pub killed_inverse: f64,
    /// `max |green - (I - P_restricted)⁻¹ Deg⁻¹|` over every absorbing
    /// vertex.
    pub killed_green: f64,
    /// `max |green - centered L⁺ differences|` over every absorbing vertex.
    pub restricted_pinv: f64,
    /// Upper bound on the worst 4-tuple disagreement between the `L⁺` and
    /// walk-series evaluations of Green differences.
    pub green_series: Option<f64>,
    /// Worst disagreement of the summed identity
    /// `(e_u - e_v)ᵀ L⁺ f = sum_w sum_t (Pᵗ_uw - Pᵗ_vw) f_w / d_w` over
    /// deterministic balanced probes.
    pub sum_over_z: Option<f64>,
    /// Worst excess `lhs - bound` of the localized quadratic-form bound on
    /// deterministic probes (negative slack means the bound holds).
    pub spectral_bound_excess: Option<f64>,
}

impl IdentityResiduals {
    /// The largest violation across the suite: residuals as-is, bound
    /// excess clamped at zero (slack is not a defect).
    pub fn worst(&self) -> f64 {
        let mut worst = self
            .pseudoinverse
            .max(self.killed_inverse)
            .max(self.killed_green)
            .max(self.restricted_pinv);
        if let Some(r) = self.green_series {
            worst = worst.max(r);
        }
        if let Some(r) = self.sum_over_z {
            worst = worst.max(r);
        }
        if let Some(e) = self.spectral_bound_excess {
            worst = worst.max(e.max(0.0));
        }
        worst
    }
}

/// Runs the full identity suite for one solved flow: Moore-Penrose checks
/// on `L⁺`, the killed-walk Green identities at every absorbing vertex,
/// the series/pseudoinverse agreement over all 4-tuples (via a
/// double-centered residual matrix), the summed identity on balanced
/// probes, and the localized quadratic-form bound.
pub fn identity_residuals(
    problem: &FlowProblem,
    op: &SensitivityOperator,
    walk: &WalkData,
) -> Result<IdentityResiduals, SpectralError> {
    let n = walk.n();
    let l = &op.laplacian;
    let lp = &op.laplacian_pinv;

    // Moore-Penrose identities, relative to the matrix scales.
    let mp1 = (l * lp * l - l).amax() / l.amax().max(1e-300);
    let mp2 = (lp * l * lp - lp).amax() / lp.amax().max(1e-300);
    let pseudoinverse = mp1.max(mp2);

    // Killed-walk identities at every absorbing vertex.
    let mut killed_inverse = 0.0_f64;
    let mut killed_green = 0.0_f64;
    let mut restricted_pinv = 0.0_f64;
    for z_bar in 0..n {
        let killed = killed_walk(op, z_bar)?;
        let m = killed.vertices.len();
        killed_inverse = killed_inverse
            .max((&killed.green * &killed.restricted_laplacian - DMatrix::identity(m, m)).amax());
        let mut via_walk = killed.fundamental.clone();
        for j in 0..m {
            for i in 0..m {
                via_walk[(i, j)] /= killed.degrees[j];
            }
        }
        killed_green = killed_green.max((&killed.green - &via_walk).amax());
        let restricted = pinv_via_restricted(op, z_bar)?;
        restricted_pinv = restricted_pinv.max((&killed.green - &restricted).amax());
    }

    // Series-based identities need a contractive walk.
    let (green_series, sum_over_z, spectral_bound_excess) = if walk.is_contractive() {
        let resolvent = centered_resolvent(walk)?;
        // Green-by-series with target scaling folded in: G_hat = R D⁻¹.
        let mut g_hat = resolvent;
        for j in 0..n {
            for i in 0..n {
                g_hat[(i, j)] /= walk.degrees[j];
            }
        }
        let diff = lp - &g_hat;
        // Double centering: any 4-tuple contraction of `diff` equals the
        // same contraction of the centered matrix, so 4 * max entry bounds
        // the worst tuple.
        let ones = DMatrix::from_element(n, n, 1.0 / n as f64);
        let centered = &diff - &ones * &diff - &diff * &ones + &ones * &diff * &ones;
        let green_series = 4.0 * centered.amax();

        // Summed identity on deterministic balanced probes.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_5eed);
        let mut sum_over_z = 0.0_f64;
        for _ in 0..3 {
            let mut f = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            let mean = f.mean();
            f.add_scalar_mut(-mean);
            let image = &diff * &f;
            sum_over_z = sum_over_z.max(image.max() - image.min());
        }

        // Localized quadratic-form bound on deterministic probes: a small
        // ball against a far single vertex, and the whole graph against a
        // two-vertex set.
        let graph = problem.graph();
        let ball = graph.ball(0, 1);
        let distances = graph.distances_from(0);
        let far = (0..n).max_by_key(|&v| distances[v]).unwrap_or(0);
        let mut excess = f64::NEG_INFINITY;
        if far != 0 {
            let (lhs, bound) =
                spectral_bound_pair(problem, walk, ball.vertices(), &[far], &[1.0])?;
            excess = excess.max(lhs - bound);
        }
        if n >= 2 {
            let all: Vec<usize> = (0..n).collect();
            let (lhs, bound) =
                spectral_bound_pair(problem, walk, &all, &[0, 1], &[1.0, -1.0])?;
            excess = excess.max(lhs - bound);
        }
        let excess = if excess.is_finite() { Some(excess) } else { None };
        (Some(green_series), Some(sum_over_z), excess)
    } else {
        (None, None, None)
    };

    Ok(IdentityResiduals {
        pseudoinverse,
        killed_inverse,
        killed_green,
        restricted_pinv,
        green_series,
        sum_over_z,
        spectral_bound_excess,
    })
}

/// A serializable summary of the spectral data attached to one solved flow.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectralReport {
    /// Walk contraction factor at the current flow.
    pub lambda: f64,
    /// Host adjacency parameter `max(|mu_2|, |mu_n|)`.
    pub mu: f64,
    /// Conservative contraction bound from curvature and degrees.
    pub rho: f64,
    /// Whether series-based machinery applies (`lambda < 1`).
    pub contractive: bool,
    /// Stationary distribution of the walk.
    pub stationary: Vec<f64>,
    /// Walk eigenvalues, descending.
    pub walk_eigenvalues: Vec<f64>,
    /// Adjacency eigenvalues of the unweighted host graph, descending.
    pub adjacency_eigenvalues: Vec<f64>,
    /// Identity-suite residuals, when the suite was run.
    pub residuals: Option<IdentityResiduals>,
}

/// Assembles the spectral report for a solved problem; pass the residual
/// suite's output to embed it.
pub fn spectral_report(
    problem: &FlowProblem,
    walk: &WalkData,
    residuals: Option<IdentityResiduals>,
) -> SpectralReport {
    let (adjacency_eigenvalues, mu) = problem.graph().adjacency_spectrum();
    let (alpha, beta) = problem.curvature_bounds();
    let (k_min, k_max) = problem.graph().degree_bounds();
    let rho = interlacing_bound(k_min as f64, k_max as f64, 1.0 / beta, 1.0 / alpha, mu);
    SpectralReport {
        lambda: walk.lambda,
        mu,
        rho,
        contractive: walk.is_contractive(),
        stationary: walk.stationary.iter().copied().collect(),
        walk_eigenvalues: walk.eigenvalues.clone(),
        adjacency_eigenvalues,
        residuals,
    }
}
