//! Error type shared by all solver and parser modules.

use thiserror::Error;

/// Errors produced by grid construction, parsing, validation, and the
/// iterative solvers.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid field: {0}")]
    InvalidField(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("conjugate gradient did not converge after {iterations} iterations (relative residual {relative_residual:.3e}, requested {requested:.3e})")]
    CgDidNotConverge {
        iterations: usize,
        relative_residual: f64,
        requested: f64,
    },

    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("evaluation domain error: {0}")]
    EvalDomain(String),

    #[error("condition ({condition}) violated for species {i} w.r.t. variable {j}: partial derivative {value:.6e} at {point:?}")]
    MonotonicityViolated {
        condition: &'static str,
        i: usize,
        j: usize,
        point: Vec<f64>,
        value: f64,
    },

    #[error("condition ({condition}) violated for species {i}: growth rate {value:.6e} at density {density:.6e} beyond the carrying capacity")]
    LogisticPatternViolated {
        condition: &'static str,
        i: usize,
        density: f64,
        value: f64,
    },

    #[error("species {i}: no carrying capacity below 1e12; growth never becomes non-positive")]
    UnboundedGrowth { i: usize },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:.3e})")]
    EigenDidNotConverge { iterations: usize, residual: f64 },

    #[error("eigenfunction not strictly positive at node {node}")]
    NonPositiveEigenfunction { node: usize },

    #[error("Rayleigh quotient of the zero field is undefined")]
    ZeroField,

    #[error("epsilon search hit the floor {floor:.1e}: criterion margin too tight to certify numerically")]
    CriterionMargin { floor: f64 },

    #[error("no positive solution: f(0) = {f0:.6e} does not exceed the principal eigenvalue {lambda1:.6e}")]
    LogisticNonexistence { f0: f64, lambda1: f64 },

    #[error("monotone iteration violated {direction} monotonicity by {violation:.3e} at step {iteration} (shift M = {shift:.3e} too small?)")]
    MonotonicityBroken {
        direction: &'static str,
        iteration: usize,
        violation: f64,
        shift: f64,
    },

    #[error("monotone iteration did not converge after {iterations} iterations (gap {gap:.3e}, residual {residual:.3e})")]
    IterationDidNotConverge {
        iterations: usize,
        gap: f64,
        residual: f64,
    },

    #[error("theta ratio degenerate: denominator {value:.3e} below 1e-14 at interior node {node}; grid too coarse near the boundary")]
    RatioDegenerate { node: usize, value: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
