//! Library side of the `ddasym` command-line tool.
//!
//! Each subcommand is a plain function returning its report, so tests can
//! drive them without spawning a process. The binary only parses flags,
//! writes files and maps errors to exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | all checks passed |
//! | 1 | a check failed (or a computation missed its tolerance) |
//! | 2 | usage or configuration error |
//! | 3 | numerical blow-up |

pub mod compare;
pub mod constants;
pub mod run_config;
pub mod simulate;
pub mod table;
pub mod verify;

pub use run_config::RunConfig;

/// Error carrying the exit code it maps to.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Check(String),
    BlowUp(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Usage(_) => 2,
            CliError::BlowUp(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
            CliError::BlowUp(m) => write!(f, "numerical blow-up: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ddasym::Error> for CliError {
    fn from(e: ddasym::Error) -> Self {
        use ddasym::Error as E;
        match e {
            E::Config(_) | E::Io(_) | E::Json(_) | E::InvalidQuadrature(_) => CliError::Usage(e.to_string()),
            E::BlowUp { .. } => CliError::BlowUp(e.to_string()),
            _ => CliError::Check(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// `T0:T1` with `T0 < T1`.
pub fn parse_window(s: &str) -> CliResult<(f64, f64)> {
    let bad = || CliError::Usage(format!("window must look like T0:T1, got '{s}'"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(a < b) {
        return Err(bad());
    }
    Ok((a, b))
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &std::path::Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}
