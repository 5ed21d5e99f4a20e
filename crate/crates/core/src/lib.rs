//! Quantum-jump unravelings of time-local master equations.
//!
//! The crate simulates `d rho/dt = L_t(rho)` with piecewise-deterministic
//! pure-state trajectories. Besides the standard Monte Carlo wave function
//! method it implements rate-operator unravelings, which stay valid when
//! some GKLS rates turn negative as long as the dynamics is P-divisible,
//! and uses the freedom in splitting `L_t` into jump and no-jump parts to
//! design trajectories with fixed post-jump states or with no deterministic
//! evolution at all.
//!
//! Layout, bottom-up:
//! - [`linalg`]: small dense complex matrices, Hermitian eigensolver, Choi matrices.
//! - [`timefn`]: rate and driving functions of time.
//! - [`generator`]: GKLS representations and representation shifts.
//! - [`rate_ops`]: rate operators, jump channels, fixed-post-jump and positive-map shifts.
//! - [`divisibility`]: CP/P-divisibility, dissipativity and Choi decomposition checks.
//! - [`models`]: the eternally non-Markovian qubit, model files, reference solutions.
//! - [`trajectory`]: the Monte Carlo engine and ensemble statistics.
//! - [`cli`]: the `roqj` command-line front end.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod divisibility;
pub mod error;
pub mod generator;
pub mod linalg;
pub mod models;
pub mod rate_ops;
mod rng;
pub mod timefn;
pub mod trajectory;

pub use error::{Error, Result};
pub use generator::{Channel, GeneratorRepresentation, ShiftOperator};
pub use linalg::{ComplexMatrix, StateVector, C64};
pub use timefn::{TimeFunction, TimeOperator};
