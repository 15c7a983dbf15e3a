use std::fmt;

use fieldforge_core::Error;

/// Process exit statuses, one per failure class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Usage = 2,
    Scene = 3,
    Budget = 4,
    Numerical = 5,
    Io = 6,
    Partial = 7,
}

pub const STATUS_HELP: &str = "Exit status:
  0  all requested outputs written
  2  usage error (bad or missing arguments)
  3  scene error (file, geometry, materials or validation)
  4  budget refusal (cell or mode count too large)
  5  numerical failure (non-finite fields, energy accounting, singular data)
  6  I/O error
  7  partial results (some sub-runs failed; see the manifest)";

#[derive(Debug)]
pub struct CliError {
    pub status: Status,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            status: Status::Usage,
            message: message.into(),
        }
    }

    pub fn partial(message: impl Into<String>) -> Self {
        Self {
            status: Status::Partial,
            message: message.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Domain(_) | Error::ThinWire { .. } | Error::Config(_) => Status::Usage,
            Error::UnknownMaterial(_)
            | Error::InvalidScene(_)
            | Error::Geometry(_)
            | Error::UnknownName { .. }
            | Error::SceneFile(_) => Status::Scene,
            Error::CellBudget { .. } | Error::ModeBudget { .. } => Status::Budget,
            Error::Convergence { .. }
            | Error::Singular(_)
            | Error::NonFinite { .. }
            | Error::EnergyAccounting { .. } => Status::Numerical,
            Error::Io(_) => Status::Io,
        };
        let mut message = e.to_string();
        if let Error::CellBudget { .. } = e {
            message.push_str(
                "; lower --resolution, raise FIELDFORGE_CELL_BUDGET, or use a scaled-down preset \
                 (cryostat-scaled, --scale-down)",
            );
        }
        Self { status, message }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self {
            status: Status::Io,
            message: e.to_string(),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self {
            status: Status::Io,
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        Self {
            status: Status::Io,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
