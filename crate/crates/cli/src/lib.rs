//! Config-driven front end over `coexist-core`: eigenvalue runs, criterion
//! checks, coexistence solves, and parameter sweeps.

pub mod commands;
pub mod config;
pub mod csvio;
