//! Principal Dirichlet eigenvalue of -Delta + q(x) and its positive
//! eigenfunction, by shifted inverse power iteration.
//!
//! With sigma = min(q) - 1 the operator -Delta_h + (q - sigma) is positive
//! definite, so every inverse-power step is a conjugate-gradient solve.
//! Only the smallest eigenvalue is ever needed here, which makes inverse
//! iteration preferable to a general eigensolver: the convergence ratio is
//! (lambda_1 - sigma)/(lambda_2 - sigma) < 1 and the iterate stays positive
//! because the shifted operator has a nonnegative inverse.

use crate::error::{Error, Result};
use crate::grid::{apply_laplacian, dot, solve_spd_from, Grid, LinearOperator, ScalarField};

/// Default convergence tolerance for the eigensolver.
pub const DEFAULT_TOL: f64 = 1e-8;

const MAX_OUTER: usize = 2000;

/// Principal eigenpair: smallest eigenvalue and its eigenfunction,
/// sign-fixed positive and sup-normalized to 1.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub lambda1: f64,
    pub phi1: ScalarField,
    /// Final ||(-Delta_h + q) phi - lambda phi||_2 / ||phi||_2.
    pub residual: f64,
    pub iterations: usize,
}

/// Smallest eigenvalue of -Delta_h + q with homogeneous Dirichlet data.
///
/// Convergence requires both eigenvalue stagnation,
/// |lambda_{k+1} - lambda_k| <= tol (1 + |lambda_k|), and the residual test
/// ||(-Delta_h + q) phi - lambda phi||_2 <= tol ||phi||_2.
pub fn principal_eigenpair(grid: &Grid, q: &ScalarField, tol: f64) -> Result<EigenResult> {
    if q.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::InvalidField(format!("tolerance {tol} must be positive")));
    }

    let sigma = q.min() - 1.0;
    let mut shifted = q.clone();
    for v in shifted.values_mut() {
        *v -= sigma;
    }
    let op = LinearOperator::with_potential(grid, 0.0, shifted)?;
    let inner_tol = (tol * 1e-2).min(1e-10);

    let n = grid.node_count();
    let mut v = ScalarField::constant(grid, 1.0 / (n as f64).sqrt());
    let mut lambda_prev = f64::INFINITY;
    let mut warm = v.clone();

    for iteration in 1..=MAX_OUTER {
        let w = solve_spd_from(&op, &v, &warm, inner_tol)?;
        // A w ~= v, so <v,w>/<w,w> estimates the shifted eigenvalue.
        let ww = dot(&w, &w);
        if ww == 0.0 {
            return Err(Error::EigenDidNotConverge {
                iterations: iteration,
                residual: f64::INFINITY,
            });
        }
        let lambda_shifted = dot(&v, &w) / ww;
        let lambda = lambda_shifted + sigma;

        // Plain 2-norm normalization keeps the CG right-hand side O(1).
        let mut next = w.clone();
        let norm2 = next.values().iter().map(|x| x * x).sum::<f64>().sqrt();
        next.scale(1.0 / norm2);
        if next.values().iter().sum::<f64>() < 0.0 {
            next.scale(-1.0);
        }

        let stagnated = (lambda - lambda_prev).abs() <= tol * (1.0 + lambda.abs());
        lambda_prev = lambda;
        // Warm start for the next solve: previous direction at its scale.
        warm = next.clone();
        warm.scale(1.0 / lambda_shifted.max(1e-300));
        v = next;

        if stagnated {
            let (lambda_exact, residual) = eigen_residual(grid, q, &v);
            if residual <= tol {
                let mut phi = v.clone();
                let sup = phi.max();
                if sup <= 0.0 {
                    return Err(Error::NonPositiveEigenfunction { node: 0 });
                }
                phi.scale(1.0 / sup);
                if let Some(node) = phi.values().iter().position(|x| *x <= 0.0) {
                    return Err(Error::NonPositiveEigenfunction { node });
                }
                let (_, res_final) = eigen_residual(grid, q, &phi);
                return Ok(EigenResult {
                    lambda1: lambda_exact,
                    phi1: phi,
                    residual: res_final,
                    iterations: iteration,
                });
            }
        }
    }

    let (_, residual) = eigen_residual(grid, q, &v);
    Err(Error::EigenDidNotConverge {
        iterations: MAX_OUTER,
        residual,
    })
}

/// Discrete Rayleigh quotient (integral |grad phi|^2 + q phi^2) / integral
/// phi^2, with the gradient energy taken as <(-Delta_h + q) phi, phi>.
pub fn rayleigh_quotient(grid: &Grid, q: &ScalarField, phi: &ScalarField) -> Result<f64> {
    if q.grid() != grid || phi.grid() != grid {
        return Err(Error::GridMismatch);
    }
    let denom = dot(phi, phi);
    if denom == 0.0 {
        return Err(Error::ZeroField);
    }
    let mut a = apply_laplacian(phi);
    for ((av, pv), qv) in a.values_mut().iter_mut().zip(phi.values()).zip(q.values()) {
        *av = -*av + qv * pv;
    }
    Ok(dot(&a, phi) / denom)
}

/// Rayleigh quotient of phi and the relative 2-norm eigen-residual at that
/// quotient.
fn eigen_residual(grid: &Grid, q: &ScalarField, phi: &ScalarField) -> (f64, f64) {
    let lambda = rayleigh_quotient(grid, q, phi).expect("nonzero iterate");
    let mut r = apply_laplacian(phi);
    for ((rv, pv), qv) in r.values_mut().iter_mut().zip(phi.values()).zip(q.values()) {
        *rv = -*rv + qv * pv - lambda * pv;
    }
    (lambda, r.l2_norm() / phi.l2_norm())
}
