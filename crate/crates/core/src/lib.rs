//! Hierarchies of Markov chains for small-noise perturbed dynamical systems
//! whose transition exponents carry ties ("rough" symmetry).
//!
//! The crate is organised in three layers:
//!
//! * [`hierarchy`] turns a table of transition costs `V_ij` between attractor
//!   labels into the nested family of chains (rank 1, 2, ...) together with
//!   their convergence, measure and exit rates.
//! * [`metastable`] answers where the process sits at time scale
//!   `exp(lambda / eps)` for a given starting attractor.
//! * [`oracle`] provides finite-`eps` ground truth: exact stationary vectors,
//!   W-graph enumeration, matrix powers, exit statistics and Monte Carlo.
//!
//! [`validation`] ties the last two together into a prediction-vs-oracle
//! report, and [`io`] holds the JSON document formats.

pub mod fixtures;
pub mod hierarchy;
pub mod io;
pub mod metastable;
pub mod oracle;
pub mod validation;

mod ext;

pub use ext::{fmt_ext, ties};
pub use hierarchy::{
    build_hierarchy, chain_characteristics, compute_alphas, detect_rough_symmetry, lift_costs,
    partition_chains, ArrowDiagram, Chain, Hierarchy, HierarchyError, QuasiPotentialMatrix,
};
pub use metastable::{
    ambiguity_set, metastable_general, metastable_theorem2, regime_table, Certainty,
    MetastableError, MetastableQuery, MetastableResult, Regime, Rule,
};
