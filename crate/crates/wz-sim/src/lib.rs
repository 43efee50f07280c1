//! Simulation lab for stochastic evolution equations in the variational
//! (monotone operator) setting, centered on the Wong-Zakai approximation:
//! the driving noise is replaced by its dyadic piecewise-constant derivative
//! and the resulting random ODE is integrated pathwise alongside the Ito
//! system it approximates, on the same noise realization.
//!
//! The crate provides
//! - spectral Galerkin spaces with H / V / V* norm evaluators,
//! - dyadically refinable Brownian paths (counter-based, coupling-safe),
//! - drift/noise operator contracts with declared-constant hypothesis audits,
//! - a model zoo (scalar geometric, heat, Burgers, p-Laplacian,
//!   porous medium) with closed-form anchors where available,
//! - Ito / smoothed-noise / controlled-system integrators,
//! - Monte-Carlo convergence, energy, modulus, tail, and identity studies,
//! - a batch CLI and runnable examples for each capability.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod error;
pub mod models;
pub mod noise;
pub mod operators;
pub mod output;
pub mod probe;
pub mod quad;
pub mod rng;
pub mod solvers;
pub mod spaces;

pub use error::{Error, Result};
