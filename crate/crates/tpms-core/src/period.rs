//! (under construction)
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PeriodError {
    #[error("unimplemented")]
    Unimplemented,
}
