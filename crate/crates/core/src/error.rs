use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid gear spec: {0}")]
    InvalidGear(String),
    #[error("degenerate profile window: {0}")]
    DegenerateProfile(String),
    #[error("invalid hob spec: {0}")]
    InvalidHob(String),
    #[error("inconsistent hob spec: derived lead angle {derived:.4}° vs declared {declared:.4}°")]
    InconsistentHob { derived: f64, declared: f64 },
    #[error("invalid machine setup: {0}")]
    InvalidSetup(String),
    #[error("schedule would contain {count} poses, cap is {cap}")]
    TooManyPoses { count: u64, cap: u64 },
    #[error("invalid grid request: {0}")]
    InvalidGrid(String),
    #[error("normal undefined at the involute origin (u = 0)")]
    NormalAtCusp,
    #[error("no cutter pose reaches the point{}", .at.map(|(r, c)| format!(" at grid ({r}, {c})")).unwrap_or_default())]
    UncutPoint { at: Option<(usize, usize)> },
    #[error("clocking alignment failed: {0}")]
    AlignmentFailed(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
