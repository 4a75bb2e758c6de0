use thiserror::Error;

/// CLI failure, one variant per exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Degenerate(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

impl From<pla_core::Error> for CliError {
    fn from(e: pla_core::Error) -> Self {
        use pla_core::Error as E;
        let msg = e.to_string();
        match e {
            E::InvalidParameter(_) => CliError::Usage(msg),
            E::NonFinite { .. } | E::DimensionMismatch(_) | E::IndexOutOfRange { .. } => {
                CliError::Input(msg)
            }
            E::NumericalFailure(_) => CliError::Numerical(msg),
            E::DegenerateInput(_)
            | E::InsufficientData { .. }
            | E::NotCentred { .. }
            | E::DegenerateVariance { .. }
            | E::Singular { .. }
            | E::DegenerateAngle
            | E::BlockMismatch { .. }
            | E::Structural(_) => CliError::Degenerate(msg),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
