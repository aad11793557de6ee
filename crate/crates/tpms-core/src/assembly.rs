//! (under construction)
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("unimplemented")]
    Unimplemented,
}
