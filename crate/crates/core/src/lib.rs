// SPDX-License-Identifier: Apache-2.0

//! Computable pieces of higher-order Fourier analysis for bounded
//! multiplicative functions: Gowers norms, kernel decompositions, Kátai
//! sums, quadratic-ring averages, parametric solutions of quadratic
//! equations and Heisenberg nilsequence diagnostics.

pub mod arith;
pub mod cli;
pub mod correlations;
pub mod error;
pub mod fourier;
pub mod gowers;
pub mod katai;
pub mod nil;
pub mod parreg;
pub mod poly;
pub mod primes;
pub mod quadfield;
pub mod structure;

pub use error::{Error, Result};
