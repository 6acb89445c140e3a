use thiserror::Error;

#[derive(Debug, Error)]
pub enum MttError {
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
    #[error("invalid association at scan {t}: {what}")]
    InvalidAssociation { t: usize, what: String },
    #[error("invalid track set: {0}")]
    InvalidTracks(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("all particle weights vanished at step {0}")]
    Degeneracy(usize),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("malformed file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, MttError>;
