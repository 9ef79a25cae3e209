//! Robust reinsurance, investment and consumption for an Epstein-Zin
//! insurer whose risky asset has an Ornstein-Uhlenbeck drift factor.
//!
//! Three solvers share one evaluation contract ([`solution::Solution`]):
//! the exact non-unit-EIS solution, the unit-EIS solution and the
//! Campbell-Shiller approximation. Independent finite-difference and Monte
//! Carlo oracles live in [`verify`], path simulation in [`sim`].

pub mod config;
pub mod error;
pub mod exact;
pub mod logquad;
pub mod params;
pub mod quadrature;
pub mod riccati;
pub mod sim;
pub mod solution;
pub mod studies;
pub mod validate;
pub mod verify;

pub use error::{Error, Result};
pub use exact::ExactSolver;
pub use logquad::{CsSolver, UnitEisSolver, WMode};
pub use params::{DerivedCoeffs, ModelParams};
pub use solution::{GValue, Solution, StrategyPoint};
