use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Protocol(#[from] plt_core::Error),
    #[error("malformed dataset: {0}")]
    Dataset(String),
    #[error("malformed wire message: {0}")]
    Malformed(String),
    #[error("peer reported {code}: {detail}")]
    Remote { code: String, detail: String },
    #[error("unexpected message: {0}")]
    UnexpectedMessage(String),
}

pub type Result<T> = std::result::Result<T, ServiceError>;
