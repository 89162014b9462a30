//! Finite-`eps` ground truth for the asymptotic predictions.
//!
//! Everything here works with the chain `p_ij = exp(-E_ij / eps)` directly.
//! The off-diagonal entries and the leaving probability `1 - p_ii` are stored
//! separately so that tiny probabilities never pass through `1 - x`.

mod chain;
mod exit;
mod fit;
mod nstep;
mod stationary;
mod wgraph;

use thiserror::Error;

pub use chain::{build_chain, FiniteEpsilonChain};
pub use exit::{exit_exact, simulate_exit, ExactExit, ExitConfig, ExitStatistics};
pub use fit::{rate_fit, rate_fit_ln, rate_fit_with_log_term, RateFit};
pub use nstep::{nstep_distribution, NStep, MAX_SQUARINGS};
pub use stationary::{is_irreducible, stationary_exact, Stationary};
pub use wgraph::{
    stationary_log_limits, stationary_log_limits_with, wgraph_exponent, wgraph_exponent_with, Exponent,
    WGraph, WGRAPH_LIMIT,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("exponent table is not square")]
    NotSquare,
    #[error("exponent ({i}, {j}) is negative or NaN")]
    BadExponent { i: usize, j: usize },
    #[error("diagonal of state {state} is negative at eps = {epsilon}")]
    DiagonalNegative { state: usize, epsilon: f64 },
    #[error("chain is reducible")]
    Reducible,
    #[error("{states} states exceeds the enumeration limit {limit}")]
    TooLarge { states: usize, limit: usize },
    #[error("lambda/eps needs {needed} squarings, limit is {limit}")]
    TooManySquarings { needed: usize, limit: usize },
    #[error("row-sum drift {drift:e} exceeds tolerance")]
    PrecisionLoss { drift: f64 },
    #[error("state {0} is not inside the region")]
    StartOutside(usize),
    #[error("no transition leaves the region")]
    NoExit,
    #[error("replica {replica} exceeded the jump cap of {cap}")]
    ReplicaBudgetExceeded { replica: usize, cap: u64 },
    #[error("fit needs at least 3 distinct grid points")]
    DegenerateGrid,
    #[error("value {value} at grid point {index} is not positive and finite")]
    NonPositiveValue { index: usize, value: f64 },
}
