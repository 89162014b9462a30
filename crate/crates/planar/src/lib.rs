//! Two-disk planar testbed for rough symmetry: three stable equilibria whose
//! exit exponents tie, with the split between them fixed by pre-exponential
//! data.

use thiserror::Error;

pub mod edge;
pub mod level;
pub mod quad;
pub mod sde;
pub mod system;
pub mod theory;
pub mod tracer;

pub use edge::{vertex_split, edge_table, EdgeTable};
pub use level::{level_quantities, LevelQuantities, Precision};
pub use sde::{hit_distribution, hit_outcomes, simulate_sde, HitDistribution, Outcome, SdeConfig, StopCause};
pub use system::{symmetric_offset, Field, Lobe, Point, TwoDiskSystem};
pub use theory::{alpha_limit, gamma, metastable_weights, theory_report, TheoryReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanarError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point ({x}, {y}) lies on the separatrix")]
    OnSeparatrix { x: f64, y: f64 },
    #[error("level z = {z} is empty in lobe {lobe}")]
    EmptyLevel { lobe: usize, z: f64 },
    #[error("point ({x}, {y}) is not on the level curve z = {z}")]
    OffLevel { x: f64, y: f64, z: f64 },
    #[error("quadrature failed: {0}")]
    QuadratureFail(String),
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("{0}")]
    BadTargets(String),
    #[error("a_hat * gamma = {product} is not positive for lobe {lobe}")]
    DegenerateWeight { lobe: usize, product: f64 },
    #[error("path left the ball of radius r_max + 1 at t = {time} (at ({x}, {y}))")]
    Unstable { time: f64, x: f64, y: f64 },
}
