//! Hamiltonian analysis of Lotka-Volterra growth models.
//!
//! This crate treats a family of economic growth models (exponential,
//! logistic, and a four-dimensional capital/debt system) as Lotka-Volterra
//! dynamics, equips each with a Poisson bivector and a Hamiltonian, verifies
//! the structure numerically, and turns the conserved quantity into an
//! explicit production function `Y(L, K)` that can also be fitted to data.
//!
//! The primary interface is the `examples/` directory; each example is a
//! runnable walkthrough of one capability:
//!
//! * `cargo run --example derive_cobb_douglas` - exponential growth to
//!   Cobb-Douglas, by coefficient solve and by the bi-Hamiltonian pair
//! * `cargo run --example verify_structures` - skew, Jacobi, and
//!   field-consistency residuals for every shipped bivector
//! * `cargo run --example conservation_audit` - integrate each model and
//!   report Hamiltonian drift
//! * `cargo run --example logistic_production` - logistic model to the
//!   saturating production function and its reduction chain
//! * `cargo run --example debt_production` - debt system to a sigmoid
//!   production surface checked along a trajectory
//! * `cargo run --example fit_production` - recover parameters from
//!   synthetic datasets
//! * `cargo run --example integrator_convergence` - observed integrator
//!   orders against closed-form flows
//!
//! A thin `ecodyn` binary exposes the same capabilities as `simulate`,
//! `verify`, `derive`, and `fit` subcommands driven by a TOML config.

pub mod cli;
pub mod error;
pub mod fitting;
pub mod hamiltonian;
pub mod integrate;
pub mod models;
pub mod poisson;
pub mod production;

pub use error::{Error, Result};
