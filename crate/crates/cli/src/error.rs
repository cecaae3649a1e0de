use std::path::Path;

use thiserror::Error;

/// Failures of a subcommand, each mapped to a process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("non-contraction at k = {}", format_ks(.ks))]
    NonContraction { ks: Vec<f64> },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Format(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("self-test failed: {}", .0.join(", "))]
    SelfTest(Vec<String>),
    #[error("{0}")]
    Other(String),
}

fn format_ks(ks: &[f64]) -> String {
    ks.iter()
        .map(|k| k.to_string())
        .collect::<Vec<_>>()
        .join(", ")
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> CliError {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 non-contraction, 3 I/O, 4 malformed input (file format, dimension,
    /// grid or configuration), 1 anything else including a failed self-test.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::NonContraction { .. } => 2,
            CliError::Io { .. } => 3,
            CliError::Format(_) | CliError::Config(_) => 4,
            CliError::SelfTest(_) | CliError::Other(_) => 1,
        }
    }
}

impl From<bihscat::Error> for CliError {
    fn from(e: bihscat::Error) -> CliError {
        use bihscat::Error as E;
        match e {
            E::NonContraction { k, .. } => CliError::NonContraction { ks: vec![k] },
            E::Io(source) => CliError::Io {
                path: "<stream>".into(),
                source,
            },
            E::Format { .. } | E::DimensionMismatch { .. } | E::ComplexPotential => {
                CliError::Format(e.to_string())
            }
            E::Config(_) | E::Domain(_) => CliError::Config(e.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}
