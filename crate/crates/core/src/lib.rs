//! Equilibria of optimal-liquidation games in which players leave the market
//! for good once their inventory reaches zero.
//!
//! The crate solves the mean-field game and the `N`-player game on a common
//! footing (a parameter `delta`, `0` for the mean-field limit and `1/N` for
//! `N` players), reconstructs individual strategies, and runs the comparative
//! studies against the classical model in which nobody drops out.

pub mod cli;
pub mod equilibrium;
pub mod error;
pub mod experiments;
pub mod model;
pub mod par;
pub mod quad;
pub mod riccati;
pub mod strategies;

pub use equilibrium::{
    find_x_hat, psi, solve_mfg, solve_mu_for_c, solve_no_dropout_baseline, solve_nplayer,
    terminal_rate, EquilibriumSolution, Market,
};
pub use error::{Error, Result};
pub use model::{
    make_constant_coefficients, make_empirical, make_exponential_sellers, make_two_sided,
    validate_assumptions, AssumptionReport, CoefficientSet, InitialDistribution,
};
pub use par::Execution;
pub use riccati::{solve_riccati, RiccatiBundle};
pub use strategies::{player_path, PlayerPath};

