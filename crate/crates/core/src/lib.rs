//! Free-electron Jaynes-Cummings simulator.
//!
//! A slow electron passing a grating-coupled Fabry-Perot microcavity recoils
//! strongly enough on photon emission that a second emission is detuned.
//! This crate builds the interaction-picture dynamics of that system over a
//! truncated electron-momentum ⊗ multimode-Fock space, integrates it, and
//! compares the result with the closed-form two-level, three-level and
//! collective N-electron solutions.
//!
//! Module map:
//! - [`model`]: constants, setups, cavity modes, Hilbert-space indexing, states
//! - [`phasematch`]: electron kinematics, grating design, detuning algebra
//! - [`hamiltonian`]: coupling tables, the sparse generator, dense matrices, RWA reductions
//! - [`dynamics`]: adaptive Dormand-Prince integration and a unitary propagation oracle
//! - [`analytic`]: closed-form few-level and collective solutions
//! - [`metrics`]: fidelities, labeled probabilities, photon statistics
//! - [`scenario`]: assembled experiments and sweeps
//! - [`config`], [`output`], [`selftest`]: the command-line runner's plumbing

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod config;

pub mod dynamics;
pub mod error;
pub mod hamiltonian;
mod linalg;

pub mod metrics;
pub mod model;
pub mod output;

pub mod phasematch;
pub mod scenario;
pub mod selftest;



pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
