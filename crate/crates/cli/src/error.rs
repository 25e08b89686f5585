use std::fmt;

/// Failure classes mapped to process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, parameters or output paths. Exit 2.
    Usage { kind: &'static str, message: String },
    /// A numerical routine failed on valid input. Exit 3.
    Numerical { kind: &'static str, message: String },
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage { kind: "usage", message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } => 2,
            CliError::Numerical { .. } => 3,
        }
    }

    /// Single-line JSON record for stderr.
    pub fn to_json_line(&self) -> String {
        let (kind, message) = match self {
            CliError::Usage { kind, message } | CliError::Numerical { kind, message } => (kind, message),
        };
        serde_json::json!({ "error": { "kind": kind, "message": message, "exit_code": self.exit_code() } }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage { message, .. } | CliError::Numerical { message, .. } => f.write_str(message),
        }
    }
}

impl From<ftms_core::Error> for CliError {
    fn from(e: ftms_core::Error) -> Self {
        use ftms_core::Error as E;
        let message = e.to_string();
        match e {
            E::NonFinite(_) => CliError::Usage { kind: "non_finite", message },
            E::InvalidParameter { .. } => CliError::Usage { kind: "invalid_parameter", message },
            E::InvalidConfig(_) => CliError::Usage { kind: "invalid_config", message },
            E::MixedFamilies => CliError::Usage { kind: "mixed_families", message },
            E::NonPhysical(_) => CliError::Numerical { kind: "non_physical", message },
            E::Singular => CliError::Numerical { kind: "singular", message },
            E::Uncorrelated => CliError::Numerical { kind: "uncorrelated", message },
            E::QuadratureNotConverged { .. } => CliError::Numerical { kind: "quadrature", message },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage { kind: "io", message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;
