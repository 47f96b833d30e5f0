use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("missing {what} {path:?}; produce it with `{producer}`")]
    MissingArtifact {
        what: &'static str,
        path: PathBuf,
        producer: &'static str,
    },
    #[error(transparent)]
    Core(#[from] supgnet::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        use supgnet::Error as E;
        ExitCode::from(match self {
            CliError::Usage(_) => 2,
            CliError::MissingArtifact { .. } => 3,
            CliError::Core(e) => match e {
                E::InvalidArgument(_)
                | E::UnsupportedDegree(_)
                | E::OutOfDomain(_)
                | E::UnsupportedMetric(_)
                | E::IncompatibleVersion { .. }
                | E::Deserialization { .. }
                | E::InvalidModel(_) => 2,
                E::Io { source, .. } if source.kind() == std::io::ErrorKind::NotFound => 3,
                _ => 4,
            },
        })
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
