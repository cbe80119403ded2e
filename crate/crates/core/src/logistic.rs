//! The scalar logistic problem Delta u + u f(u) = 0, u = 0 on the boundary,
//! u > 0, for a decreasing growth section f.
//!
//! Existence follows the dichotomy: a positive solution theta exists if and
//! only if f(0) exceeds the principal Dirichlet eigenvalue. The solver turns
//! the existence proof into an algorithm: a shifted monotone iteration
//!
//! ```text
//! u_{k+1} = (-Delta_h + M)^{-1} (M u_k + u_k f(u_k)),   M > sup |d(s f(s))/ds|
//! ```
//!
//! run from the constant capacity (a decreasing sequence) and from a small
//! multiple of the principal eigenfunction (an increasing one). Both limits
//! coincide with theta; their sup-distance is the numerical witness of
//! uniqueness and the returned field is their midpoint.
//!
//! Existence is decided by the *discrete* eigenvalue and the margin
//! f(0) - lambda1 is reported, so proximity to the bifurcation is visible
//! rather than silently mis-resolved.

use crate::eigen::{principal_eigenpair, EigenResult};
use crate::error::{Error, Result};
use crate::expr::ExprAst;
use crate::grid::{apply_laplacian, solve_spd_from, Grid, LinearOperator, ScalarField};
use crate::growth::validate_section;

/// Default outer tolerance (sup norm) for the monotone iteration.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Default cap on outer iterations.
pub const DEFAULT_MAX_OUTER: usize = 200_000;
/// Pointwise slack treated as round-off when asserting monotonicity.
pub const MONOTONE_SLACK: f64 = 1e-12;
/// Floor for the epsilon halving search.
const EPSILON_FLOOR: f64 = 1e-12;
/// Points used when sampling the shift bound on [0, capacity].
const SHIFT_SAMPLES: usize = 1001;

/// Outcome of a logistic solve: either the positive solution theta with
/// convergence metadata, or a certified nonexistence flag.
#[derive(Debug, Clone)]
pub struct LogisticResult {
    /// Discrete dichotomy: true iff f(0) > lambda1 on this grid.
    pub exists: bool,
    /// The positive solution, present iff `exists`.
    pub theta: Option<ScalarField>,
    pub f0: f64,
    pub lambda1: f64,
    /// f(0) - lambda1; small magnitudes mean the dichotomy sits near the
    /// bifurcation and grid refinement may flip it.
    pub margin: f64,
    /// Carrying capacity of the section f.
    pub capacity: f64,
    /// Sup norm of Delta_h theta + theta f(theta) at the returned field.
    pub residual: f64,
    pub iterations: usize,
    /// Largest observed monotonicity violation across both sequences
    /// (bounded by [`MONOTONE_SLACK`] on success).
    pub monotone_violation: f64,
}

/// Solve the logistic problem with defaults for the iteration budget and the
/// internal eigensolve.
pub fn solve_logistic(grid: &Grid, f: &ExprAst, tol: f64) -> Result<LogisticResult> {
    let eig = principal_eigenpair(grid, &ScalarField::zeros(grid), eigen_tol(tol))?;
    solve_logistic_with(grid, f, tol, DEFAULT_MAX_OUTER, &eig)
}

pub(crate) fn eigen_tol(tol: f64) -> f64 {
    (tol * 1e-2).min(1e-10)
}

/// Logistic solve reusing a precomputed eigenpair of -Delta_h (q = 0).
pub fn solve_logistic_with(
    grid: &Grid,
    f: &ExprAst,
    tol: f64,
    max_outer: usize,
    eig: &EigenResult,
) -> Result<LogisticResult> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidField(format!("tolerance {tol} must be positive")));
    }
    let check = validate_section(f)?;
    let lambda1 = eig.lambda1;
    let margin = check.f0 - lambda1;

    if margin <= 0.0 {
        return Ok(LogisticResult {
            exists: false,
            theta: None,
            f0: check.f0,
            lambda1,
            margin,
            capacity: check.capacity,
            residual: 0.0,
            iterations: 0,
            monotone_violation: 0.0,
        });
    }

    let shift = shift_bound(f, check.capacity)?;
    let op = LinearOperator::new(grid, shift)?;
    let epsilon = pick_epsilon(grid, f, lambda1, &eig.phi1)?;

    let mut upper = ScalarField::constant(grid, check.capacity);
    let mut lower = eig.phi1.clone();
    lower.scale(epsilon);

    let mut stag_req = tol / (2.0 * (1.0 + shift));
    let mut gap_req = tol;
    let mut violation = 0.0f64;
    let inner_tol = inner_cg_tol_for(grid, shift, check.capacity, tol);

    let mut iterations = 0;
    loop {
        if iterations >= max_outer {
            let gap = upper.max_excess_over(&lower).max(0.0);
            let mid = ScalarField::midpoint(&upper, &lower);
            return Err(Error::IterationDidNotConverge {
                iterations,
                gap,
                residual: residual_sup(&mid, f)?,
            });
        }
        let next_upper = monotone_step(&op, &upper, f, inner_tol)?;
        let next_lower = monotone_step(&op, &lower, f, inner_tol)?;
        iterations += 1;

        let up_viol = next_upper.max_excess_over(&upper);
        let low_viol = lower.max_excess_over(&next_lower);
        violation = violation.max(up_viol).max(low_viol);
        if up_viol > MONOTONE_SLACK {
            return Err(Error::MonotonicityBroken {
                direction: "upper (non-increasing)",
                iteration: iterations,
                violation: up_viol,
                shift,
            });
        }
        if low_viol > MONOTONE_SLACK {
            return Err(Error::MonotonicityBroken {
                direction: "lower (non-decreasing)",
                iteration: iterations,
                violation: low_viol,
                shift,
            });
        }
        let crossing = next_lower.max_excess_over(&next_upper);
        if crossing > MONOTONE_SLACK {
            return Err(Error::MonotonicityBroken {
                direction: "sandwich (lower <= upper)",
                iteration: iterations,
                violation: crossing,
                shift,
            });
        }

        let step = next_upper
            .sup_distance(&upper)
            .max(next_lower.sup_distance(&lower));
        upper = next_upper;
        lower = next_lower;

        if step <= stag_req {
            let gap = upper.max_excess_over(&lower).max(0.0);
            if gap <= gap_req {
                let theta = ScalarField::midpoint(&upper, &lower);
                let residual = residual_sup(&theta, f)?;
                if residual <= tol {
                    return Ok(LogisticResult {
                        exists: true,
                        theta: Some(theta),
                        f0: check.f0,
                        lambda1,
                        margin,
                        capacity: check.capacity,
                        residual,
                        iterations,
                        monotone_violation: violation,
                    });
                }
                // Stagnation was declared too early for the residual
                // contract; keep iterating with tighter thresholds.
                stag_req *= 0.25;
                gap_req *= 0.25;
            }
        }
    }
}

/// One step of the shifted iteration: solve (-Delta_h + M) w = M u + u f(u),
/// warm-started at u.
fn monotone_step(
    op: &LinearOperator,
    u: &ScalarField,
    f: &ExprAst,
    inner_tol: f64,
) -> Result<ScalarField> {
    let mut rhs = u.clone();
    let shift = op.shift();
    for v in rhs.values_mut() {
        *v = shift * *v + *v * f.eval(&[*v])?;
    }
    solve_spd_from(op, &rhs, u, inner_tol)
}

/// Sup norm of Delta_h u + u f(u).
pub fn residual_sup(u: &ScalarField, f: &ExprAst) -> Result<f64> {
    let lap = apply_laplacian(u);
    let mut worst = 0.0f64;
    for (l, v) in lap.values().iter().zip(u.values()) {
        worst = worst.max((l + v * f.eval(&[*v])?).abs());
    }
    Ok(worst)
}

/// Shift dominating the nonlinearity slope: sampled sup over [0, capacity]
/// of |f(s) + s f'(s)|, plus a unit margin against sampling error.
fn shift_bound(f: &ExprAst, capacity: f64) -> Result<f64> {
    let df = f.differentiate(0);
    let mut sup = 0.0f64;
    for k in 0..SHIFT_SAMPLES {
        let s = capacity * k as f64 / (SHIFT_SAMPLES - 1) as f64;
        sup = sup.max((f.eval(&[s])? + s * df.eval(&[s])?).abs());
    }
    Ok(sup + 1.0)
}

/// Relative CG tolerance for inner solves: capped at 1e-2 x outer tolerance,
/// and tightened so the solve error stays near the monotonicity round-off
/// slack (the error bound is ||r||_2 / lambda_min of the shifted operator).
pub(crate) fn inner_cg_tol_for(grid: &Grid, shift: f64, scale: f64, tol: f64) -> f64 {
    let lam_min = grid.laplacian_min_eig() + shift;
    let rhs_scale = (shift + 1.0) * (1.0 + scale) * (grid.node_count() as f64).sqrt();
    let budget = 0.1 * MONOTONE_SLACK * (1.0 + scale) * lam_min / rhs_scale;
    budget.clamp(1e-14, (tol * 1e-2).max(1e-14))
}

/// Largest epsilon in {1, 1/2, 1/4, ...} such that f(epsilon phi1) stays
/// strictly above lambda1 at every interior node, making epsilon phi1 a
/// lower solution. Errors when the search reaches 1e-12: the margin is too
/// tight to certify numerically.
pub fn pick_epsilon(
    grid: &Grid,
    f: &ExprAst,
    lambda1: f64,
    phi1: &ScalarField,
) -> Result<f64> {
    if phi1.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let mut eps = 1.0f64;
    while eps >= EPSILON_FLOOR {
        let mut ok = true;
        for &p in phi1.values() {
            if f.eval(&[eps * p])? <= lambda1 {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(eps);
        }
        eps *= 0.5;
    }
    Err(Error::CriterionMargin {
        floor: EPSILON_FLOOR,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use std::f64::consts::PI;

    fn linear_section(a: f64) -> ExprAst {
        parse(&format!("{a:?} - u"), 1).unwrap()
    }

    #[test]
    fn dichotomy_flips_once_across_lambda1() {
        let grid = Grid::line(1.0, 61).unwrap();
        let mut last_exists = false;
        let mut flips = 0;
        for a in [5.0, 8.0, 9.8, 9.9, 10.0, 12.0, 15.0] {
            let r = solve_logistic(&grid, &linear_section(a), 1e-8).unwrap();
            assert_eq!(r.exists, a > r.lambda1, "a = {a}, lambda1 = {}", r.lambda1);
            if r.exists != last_exists {
                flips += 1;
                last_exists = r.exists;
            }
        }
        assert_eq!(flips, 1);
    }

    #[test]
    fn subcritical_growth_has_no_positive_solution() {
        let grid = Grid::line(1.0, 81).unwrap();
        let r = solve_logistic(&grid, &linear_section(5.0), 1e-8).unwrap();
        assert!(!r.exists);
        assert!(r.theta.is_none());
        assert!(r.margin < 0.0);
        assert!((r.lambda1 - PI * PI).abs() < 0.01);
    }

    #[test]
    fn supercritical_solution_is_positive_bounded_and_accurate() {
        let grid = Grid::line(1.0, 81).unwrap();
        let r = solve_logistic(&grid, &linear_section(12.0), 1e-8).unwrap();
        assert!(r.exists);
        let theta = r.theta.as_ref().unwrap();
        assert!(theta.min() > 0.0);
        assert!(theta.max() <= 12.0 + 1e-9);
        assert!(r.residual <= 1e-8);
        assert!(r.monotone_violation <= MONOTONE_SLACK);
        assert!((r.capacity - 12.0).abs() < 1e-9);
    }

    #[test]
    fn solutions_compare_monotonically_in_a() {
        let grid = Grid::line(1.0, 61).unwrap();
        let r1 = solve_logistic(&grid, &linear_section(11.0), 1e-9).unwrap();
        let r2 = solve_logistic(&grid, &linear_section(13.0), 1e-9).unwrap();
        let t1 = r1.theta.unwrap();
        let t2 = r2.theta.unwrap();
        assert!(t1.max_excess_over(&t2) <= 1e-7, "theta_11 <= theta_13 pointwise");
    }

    #[test]
    fn near_bifurcation_solution_is_small() {
        let grid = Grid::line(1.0, 31).unwrap();
        let eig = principal_eigenpair(&grid, &ScalarField::zeros(&grid), 1e-12).unwrap();
        let sups: Vec<f64> = [(0.5, 1e-8), (0.1, 1e-8), (1e-6, 1e-2)]
            .iter()
            .map(|&(da, tol)| {
                let f = linear_section(eig.lambda1 + da);
                let r = solve_logistic_with(&grid, &f, tol, 2_000_000, &eig).unwrap();
                assert!(r.exists, "margin {da} must exist");
                r.theta.unwrap().max()
            })
            .collect();
        assert!(sups[0] > sups[1] && sups[1] > sups[2], "sup theta shrinks: {sups:?}");
        assert!(sups[2] < 1e-2, "near-bifurcation sup {}", sups[2]);
    }

    #[test]
    fn two_dimensional_logistic() {
        let grid = Grid::rectangle(1.0, 1.0, 12, 12).unwrap();
        // lambda1 ~ 2 pi^2 ~ 19.7; a = 25 is supercritical.
        let r = solve_logistic(&grid, &linear_section(25.0), 1e-8).unwrap();
        assert!(r.exists);
        let theta = r.theta.unwrap();
        assert!(theta.min() > 0.0 && theta.max() <= 25.0);
        assert!(r.residual <= 1e-8);
    }

    #[test]
    fn pick_epsilon_accepts_wide_margin_at_one() {
        let grid = Grid::line(1.0, 41).unwrap();
        let eig = principal_eigenpair(&grid, &ScalarField::zeros(&grid), 1e-10).unwrap();
        // g(u, c1) = 13.5 - u: at eps = 1, 13.5 - phi1 >= 12.5 > lambda1.
        let f = parse("13.5 - u", 1).unwrap();
        let eps = pick_epsilon(&grid, &f, eig.lambda1, &eig.phi1).unwrap();
        assert_eq!(eps, 1.0);
        assert!(eps <= 13.5 - eig.lambda1);
    }

    #[test]
    fn pick_epsilon_zero_margin_errors() {
        let grid = Grid::line(1.0, 41).unwrap();
        let eig = principal_eigenpair(&grid, &ScalarField::zeros(&grid), 1e-10).unwrap();
        let f = parse(&format!("{:?} - u", eig.lambda1), 1).unwrap();
        assert!(matches!(
            pick_epsilon(&grid, &f, eig.lambda1, &eig.phi1),
            Err(Error::CriterionMargin { .. })
        ));
    }

    #[test]
    fn pick_epsilon_halves_when_capacity_small() {
        let grid = Grid::line(1.0, 41).unwrap();
        let eig = principal_eigenpair(&grid, &ScalarField::zeros(&grid), 1e-10).unwrap();
        // f(1) = -12 fails at eps = 1; the search halves until f(eps) > lambda1.
        let f = parse("12 - 24*u", 1).unwrap();
        let eps = pick_epsilon(&grid, &f, eig.lambda1, &eig.phi1).unwrap();
        assert!(eps < 0.5 / 2.0 + 1e-15 && eps > 0.0);
        assert!(f.eval(&[eps]).unwrap() > eig.lambda1);
    }
}
