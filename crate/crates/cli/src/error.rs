use metahier_core::io::InputError;
use metahier_core::HierarchyError;
use thiserror::Error;

/// Process exit codes.
pub mod code {
    pub const OK: u8 = 0;
    pub const FAILURE: u8 = 1;
    pub const BAD_INPUT: u8 = 2;
    pub const ROW_ALL_INFINITE: u8 = 3;
    pub const CHECK_FAILED: u8 = 4;
    pub const PRECISION_LOSS: u8 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Input { path: String, source: InputError },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Metastable(#[from] metahier_core::MetastableError),
    #[error(transparent)]
    Planar(#[from] metahier_planar::PlanarError),
    #[error(transparent)]
    Validation(#[from] metahier_core::validation::ValidationError),
    #[error("writing output: {0}")]
    Write(#[from] std::io::Error),
    #[error("writing csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Threads(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Input { source: InputError::Invalid(HierarchyError::RowAllInfinite(_)), .. } => {
                code::ROW_ALL_INFINITE
            }
            CliError::Read { .. } | CliError::Input { .. } | CliError::Usage(_) | CliError::Metastable(_) => {
                code::BAD_INPUT
            }
            _ => code::FAILURE,
        }
    }
}
