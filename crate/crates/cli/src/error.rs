use std::fmt;

/// CLI failure with a stable machine-parsable code.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: &'static str, message: impl Into<String>) -> CliError {
        CliError {
            code,
            message: message.into(),
        }
    }

    pub fn config(message: impl Into<String>) -> CliError {
        CliError::new("E_CONFIG", message)
    }

    pub fn io(message: impl Into<String>) -> CliError {
        CliError::new("E_IO", message)
    }

    pub fn data(message: impl Into<String>) -> CliError {
        CliError::new("E_DATA", message)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.code, self.message)
    }
}

impl From<formdml::Error> for CliError {
    fn from(e: formdml::Error) -> CliError {
        CliError {
            code: e.code(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> CliError {
        CliError::new("E_CSV", e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
