use std::io;
use std::path::PathBuf;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Success = 0,
    Input = 2,
    Numeric = 3,
    NotConverged = 4,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Core(#[from] dpc_core::Error),
    /// A core error annotated with a series label.
    #[error("{message}")]
    Labelled { message: String, numeric: bool },
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn status(&self) -> ExitStatus {
        use dpc_core::Error as E;
        match self {
            CliError::Io { .. } | CliError::Input(_) => ExitStatus::Input,
            CliError::Core(E::Shape(_) | E::Input(_) | E::Config(_)) => ExitStatus::Input,
            CliError::Core(_) => ExitStatus::Numeric,
            CliError::Labelled { numeric, .. } => {
                if *numeric {
                    ExitStatus::Numeric
                } else {
                    ExitStatus::Input
                }
            }
            CliError::NotConverged(_) => ExitStatus::NotConverged,
        }
    }

    /// Replaces series indices in exact-fit errors by their labels.
    pub fn with_labels(err: dpc_core::Error, labels: &[String]) -> Self {
        match err {
            dpc_core::Error::ExactFit { series } => CliError::Labelled {
                message: format!(
                    "exact fit: robust scale of series `{}` is zero; try fewer components or inspect that series",
                    labels.get(series).map(String::as_str).unwrap_or("?")
                ),
                numeric: true,
            },
            other => CliError::Core(other),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit_names_the_series() {
        let labels = vec!["gdp".to_string(), "ipi".to_string()];
        let err = CliError::with_labels(dpc_core::Error::ExactFit { series: 1 }, &labels);
        assert!(err.to_string().contains("`ipi`"));
        assert_eq!(err.status(), ExitStatus::Numeric);
        let err = CliError::with_labels(dpc_core::Error::Config("x".into()), &labels);
        assert_eq!(err.status(), ExitStatus::Input);
    }
}
