use std::fmt;

/// Failures mapped onto the process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent configuration (exit 2).
    Config(String),
    /// A size or resource limit was hit (exit 3).
    Resource(String),
    /// A property check failed; outputs were still written (exit 1).
    Property(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Property(_) => 1,
            CliError::Config(_) => 2,
            CliError::Resource(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Resource(m) => write!(f, "resource limit: {m}"),
            CliError::Property(m) => write!(f, "property check failed: {m}"),
        }
    }
}

impl From<strongcoord::Error> for CliError {
    fn from(e: strongcoord::Error) -> Self {
        match e {
            strongcoord::Error::Budget { .. } => CliError::Resource(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Resource(format!("i/o: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Resource(format!("csv: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Resource(format!("json: {e}"))
    }
}
