#![allow(clippy::needless_range_loop)] // indexed loops over parallel node arrays

//! Coexistence steady states of diffusive competition systems with Dirichlet
//! boundary conditions.
//!
//! The library discretizes the elliptic system
//!
//! ```text
//! Delta u_i + u_i g_i(u_1, ..., u_N) = 0   in a box,
//! u_i = 0                                  on the boundary,
//! ```
//!
//! for competitive growth rates `g_i`, and provides:
//!
//! * [`grid`] — rectangular grids, the discrete Dirichlet Laplacian, and
//!   conjugate-gradient solves of shifted systems;
//! * [`expr`] — a small expression language for growth rates with exact
//!   symbolic differentiation;
//! * [`growth`] — validated growth models: monotonicity checks, carrying
//!   capacities, sampled bounds on partial derivatives;
//! * [`eigen`] — the principal Dirichlet eigenvalue of `-Delta + q` with its
//!   positive eigenfunction;
//! * [`logistic`] — the scalar logistic problem and its existence dichotomy;
//! * [`coexist`] — upper/lower solution pairs and the interleaved monotone
//!   iteration to maximal/minimal coexistence states;
//! * [`criteria`] — algebraically computable existence, nonexistence, and
//!   uniqueness criteria, assembled into a serializable report.

pub mod coexist;
pub mod criteria;
pub mod eigen;
pub mod error;
pub mod expr;
pub mod grid;
pub mod growth;
pub mod logistic;

pub use error::{Error, Result};
pub use expr::ExprAst;
pub use grid::{Grid, LinearOperator, ScalarField};
