//! Strictly convex edge cost models.
//!
//! Every cost `f` here is twice differentiable with curvature pinned between
//! two positive constants, `alpha <= f''(x) <= beta` for all `x`. That
//! sandwich is what the rest of the crate leans on: the inverse Hessian
//! weights `1/f''` that define the weighted graph stay inside
//! `[1/beta, 1/alpha]`, and the projected-gradient solver contracts at a
//! rate governed by the condition number `Q = beta/alpha`.
//!
//! Two families are provided. `Quadratic` has constant curvature (`Q = 1`
//! when uniform). `LogCosh` interpolates between two quadratic regimes:
//! curvature `beta` near the origin easing to `alpha` for large flows, a
//! smooth stand-in for soft congestion.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from cost model construction and evaluation.
#[derive(Debug, Error)]
pub enum CostError {
    /// Curvature bounds must satisfy `0 < alpha <= beta` and be finite.
    #[error("invalid curvature bounds alpha={alpha}, beta={beta} (need 0 < alpha <= beta, finite)")]
    InvalidCurvature {
        /// Lower curvature bound.
        alpha: f64,
        /// Upper curvature bound.
        beta: f64,
    },
    /// A linear coefficient must be finite.
    #[error("linear coefficient {0} is not finite")]
    InvalidLinear(f64),
    /// The gradient inversion failed to reach its tolerance.
    #[error("inverse gradient did not converge for target {target} (best residual {residual:e})")]
    InverseGradientDiverged {
        /// The gradient value being inverted.
        target: f64,
        /// Best `|f'(x) - target|` reached.
        residual: f64,
    },
    /// A cost list was empty where at least one edge is required.
    #[error("cost list is empty")]
    Empty,
}

/// A strictly convex, twice differentiable edge cost with global curvature
/// bounds `alpha <= f'' <= beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CostModel {
    /// `f(x) = (a/2) x^2 + c x`, constant curvature `a`.
    Quadratic {
        /// Curvature (both `alpha` and `beta`).
        a: f64,
        /// Linear coefficient.
        c: f64,
    },
    /// `f(x) = (alpha/2) x^2 + (beta - alpha) log cosh(x)`.
    ///
    /// Curvature `alpha + (beta - alpha) sech^2(x)`: exactly `beta` at the
    /// origin, approaching `alpha` for large `|x|`.
    LogCosh {
        /// Asymptotic curvature for large flows.
        alpha: f64,
        /// Curvature at zero flow.
        beta: f64,
    },
}

/// `log cosh x`, stable for large `|x|` where `cosh` itself overflows.
fn ln_cosh(x: f64) -> f64 {
    x.abs() - std::f64::consts::LN_2 + (-2.0 * x.abs()).exp().ln_1p()
}

impl CostModel {
    /// A quadratic cost, validating coefficients.
    pub fn quadratic(a: f64, c: f64) -> Result<Self, CostError> {
        if !(a.is_finite() && a > 0.0) {
            return Err(CostError::InvalidCurvature { alpha: a, beta: a });
        }
        if !c.is_finite() {
            return Err(CostError::InvalidLinear(c));
        }
        Ok(CostModel::Quadratic { a, c })
    }

    /// A log-cosh cost, validating curvature bounds.
    pub fn log_cosh(alpha: f64, beta: f64) -> Result<Self, CostError> {
        if !(alpha.is_finite() && beta.is_finite() && 0.0 < alpha && alpha <= beta) {
            return Err(CostError::InvalidCurvature { alpha, beta });
        }
        Ok(CostModel::LogCosh { alpha, beta })
    }

    /// Lower curvature bound `alpha`.
    pub fn alpha(&self) -> f64 {
        match *self {
            CostModel::Quadratic { a, .. } => a,
            CostModel::LogCosh { alpha, .. } => alpha,
        }
    }

    /// Upper curvature bound `beta`.
    pub fn beta(&self) -> f64 {
        match *self {
            CostModel::Quadratic { a, .. } => a,
            CostModel::LogCosh { beta, .. } => beta,
        }
    }

    /// Value, first, and second derivative at `x`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        match *self {
            CostModel::Quadratic { a, c } => (0.5 * a * x * x + c * x, a * x + c, a),
            CostModel::LogCosh { alpha, beta } => {
                let t = x.tanh();
                let f = 0.5 * alpha * x * x + (beta - alpha) * ln_cosh(x);
                let f1 = alpha * x + (beta - alpha) * t;
                // sech^2 = 1 - tanh^2, which stays in [0, 1] without overflow.
                let f2 = alpha + (beta - alpha) * (1.0 - t * t);
                (f, f1, f2)
            }
        }
    }

    /// First derivative at `x`.
    pub fn gradient(&self, x: f64) -> f64 {
        self.eval(x).1
    }

    /// Second derivative at `x`.
    pub fn curvature(&self, x: f64) -> f64 {
        self.eval(x).2
    }

    /// Solves `f'(x) = y` for `x`.
    ///
    /// Safeguarded Newton inside a bracket grown geometrically from
    /// `[y/beta - 1, y/alpha + 1]`: Newton steps are taken while they stay
    /// in the bracket and shrink the residual, with bisection as fallback,
    /// so strong convexity makes convergence unconditional. The result
    /// satisfies `|f'(x) - y| <= 1e-12 * max(1, |y|)`.
    pub fn inverse_gradient(&self, y: f64) -> Result<f64, CostError> {
        let tol = 1e-12 * y.abs().max(1.0);
        // f' is increasing with slope in [alpha, beta]; grow the initial
        // bracket until it straddles the root (linear offsets shift it).
        let mut lo = y / self.beta() - 1.0;
        let mut hi = y / self.alpha() + 1.0;
        let mut step = 1.0;
        while self.gradient(lo) > y {
            lo -= step;
            step *= 2.0;
        }
        step = 1.0;
        while self.gradient(hi) < y {
            hi += step;
            step *= 2.0;
        }
        let mut x = 0.5 * (lo + hi);
        let mut best_res = f64::INFINITY;
        for _ in 0..200 {
            let (_, f1, f2) = self.eval(x);
            let res = f1 - y;
            best_res = best_res.min(res.abs());
            if res.abs() <= tol {
                return Ok(x);
            }
            if res > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - res / f2;
            x = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
        }
        Err(CostError::InverseGradientDiverged {
            target: y,
            residual: best_res,
        })
    }
}

/// Global condition number of a family of edge costs:
/// `Q = max_e beta_e / min_e alpha_e`.
pub fn condition_number(costs: &[CostModel]) -> Result<f64, CostError> {
    if costs.is_empty() {
        return Err(CostError::Empty);
    }
    let alpha = costs.iter().map(|c| c.alpha()).fold(f64::INFINITY, f64::min);
    let beta = costs.iter().map(|c| c.beta()).fold(0.0_f64, f64::max);
    Ok(beta / alpha)
}

/// Smallest curvature lower bound and largest curvature upper bound across
/// a family of edge costs: the global `(alpha, beta)` sandwich.
pub fn curvature_bounds(costs: &[CostModel]) -> Result<(f64, f64), CostError> {
    if costs.is_empty() {
        return Err(CostError::Empty);
    }
    let alpha = costs.iter().map(|c| c.alpha()).fold(f64::INFINITY, f64::min);
    let beta = costs.iter().map(|c| c.beta()).fold(0.0_f64, f64::max);
    Ok((alpha, beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRID: std::ops::RangeInclusive<i32> = -100..=100;

    fn grid_points() -> impl Iterator<Item = f64> {
        // 201 points spanning [-10, 10].
        GRID.map(|i| i as f64 * 0.1)
    }

    #[test]
    fn quadratic_eval() {
        let f = CostModel::quadratic(2.0, -1.0).unwrap();
        let (v, g, h) = f.eval(3.0);
        assert_eq!(v, 0.5 * 2.0 * 9.0 - 3.0);
        assert_eq!(g, 2.0 * 3.0 - 1.0);
        assert_eq!(h, 2.0);
    }

    #[test]
    fn log_cosh_matches_quadratic_near_zero_and_linear_tail() {
        let f = CostModel::log_cosh(1.0, 3.0).unwrap();
        // Curvature beta at the origin, alpha in the far tail.
        assert!((f.curvature(0.0) - 3.0).abs() < 1e-15);
        assert!((f.curvature(40.0) - 1.0).abs() < 1e-12);
        // Value stays finite far out where cosh overflows.
        let (v, _, _) = f.eval(500.0);
        assert!(v.is_finite());
        // ln cosh(x) ~ |x| - ln 2 for large |x|.
        let expected = 0.5 * 1.0 * 500.0_f64.powi(2) + 2.0 * (500.0 - std::f64::consts::LN_2);
        assert!((v - expected).abs() < 1e-9 * expected.abs());
    }

    #[test]
    fn curvature_stays_in_declared_bounds() {
        let models = [
            CostModel::quadratic(0.7, 2.0).unwrap(),
            CostModel::log_cosh(0.5, 4.0).unwrap(),
            CostModel::log_cosh(1.0, 1.0).unwrap(),
        ];
        for f in &models {
            for x in grid_points() {
                let h = f.curvature(x);
                assert!(
                    f.alpha() - 1e-15 <= h && h <= f.beta() + 1e-15,
                    "curvature {h} escapes [{}, {}] at x={x}",
                    f.alpha(),
                    f.beta()
                );
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        // Central differences with h = 1e-5 against the analytic first and
        // second derivatives, tolerance 1e-6 * (1 + |f''|).
        let h = 1e-5;
        let models = [
            CostModel::quadratic(1.5, 0.3).unwrap(),
            CostModel::log_cosh(1.0, 2.0).unwrap(),
            CostModel::log_cosh(0.25, 5.0).unwrap(),
        ];
        for f in &models {
            for x in grid_points() {
                let (_, f1, f2) = f.eval(x);
                let fd1 = (f.eval(x + h).0 - f.eval(x - h).0) / (2.0 * h);
                let fd2 = (f.eval(x + h).0 - 2.0 * f.eval(x).0 + f.eval(x - h).0) / (h * h);
                let tol = 1e-6 * (1.0 + f2.abs());
                assert!((f1 - fd1).abs() <= tol, "grad mismatch at x={x}: {f1} vs {fd1}");
                assert!((f2 - fd2).abs() <= 1e-3 * (1.0 + f2.abs()), "curv mismatch at x={x}");
            }
        }
    }

    #[test]
    fn inverse_gradient_inverts_gradient() {
        let models = [
            CostModel::quadratic(2.0, 7.5).unwrap(),
            CostModel::log_cosh(0.5, 3.0).unwrap(),
        ];
        for f in &models {
            for x in grid_points() {
                let y = f.gradient(x);
                let back = f.inverse_gradient(y).unwrap();
                assert!(
                    (back - x).abs() <= 1e-10 * x.abs().max(1.0),
                    "round trip failed at x={x}: got {back}"
                );
            }
        }
    }

    #[test]
    fn inverse_gradient_handles_large_offsets() {
        // The initial bracket misses the root; geometric growth must find it.
        let f = CostModel::quadratic(1.0, 1000.0).unwrap();
        let x = f.inverse_gradient(0.0).unwrap();
        assert!((x + 1000.0).abs() < 1e-9);
    }

    #[test]
    fn condition_number_over_family() {
        let costs = [
            CostModel::quadratic(1.0, 0.0).unwrap(),
            CostModel::log_cosh(0.5, 2.0).unwrap(),
        ];
        assert_eq!(condition_number(&costs).unwrap(), 4.0);
        assert_eq!(curvature_bounds(&costs).unwrap(), (0.5, 2.0));
        assert!(condition_number(&[]).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CostModel::quadratic(0.0, 0.0).is_err());
        assert!(CostModel::quadratic(-1.0, 0.0).is_err());
        assert!(CostModel::quadratic(1.0, f64::NAN).is_err());
        assert!(CostModel::log_cosh(2.0, 1.0).is_err());
        assert!(CostModel::log_cosh(0.0, 1.0).is_err());
    }

    #[test]
    fn cost_json_round_trip() {
        let q = CostModel::quadratic(1.0, -0.5).unwrap();
        let json = serde_json::to_string(&q).unwrap();
        assert_eq!(json, r#"{"kind":"quadratic","a":1.0,"c":-0.5}"#);
        assert_eq!(serde_json::from_str::<CostModel>(&json).unwrap(), q);

        let l = CostModel::log_cosh(1.0, 2.0).unwrap();
        let json = serde_json::to_string(&l).unwrap();
        assert_eq!(json, r#"{"kind":"logcosh","alpha":1.0,"beta":2.0}"#);
        assert_eq!(serde_json::from_str::<CostModel>(&json).unwrap(), l);
    }
}
