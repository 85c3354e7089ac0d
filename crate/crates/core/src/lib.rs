//! Dependence analysis and control for discrete-time queues whose arrival and
//! service processes are Markov additive processes.
//!
//! The crate is organised around six modules:
//!
//! * [`spectral`]: kernels, transform matrices, Perron-Frobenius spectra and
//!   the stability-equation root.
//! * [`bounds`]: double-sided delay/backlog tail bounds, finite-horizon bounds
//!   and delay-constrained capacity bounds.
//! * [`copula`]: copula families, the Darsow ⋆-product, transition-matrix
//!   extraction from copulas and the dependence-control plan.
//! * [`channel`]: Rayleigh capacity kernels and controlled capacity paths.
//! * [`sim`]: Monte Carlo queue simulation, tail estimation, martingale checks
//!   and stochastic-order checkers.
//! * [`cli`]: configuration documents and the command-line front end.

// comparisons are written `!(x > 0.0)` so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channel;
pub mod cli;
pub mod config;
pub mod copula;
mod error;
pub mod output;
pub mod quadrature;
pub mod sim;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
