use thiserror::Error;

use crate::amr::AmrError;
use crate::embed::EmbedError;
use crate::eval::EvalError;
use crate::factorize::FactorizeError;
use crate::transport::TransportError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Amr(#[from] AmrError),
    #[error(transparent)]
    Factorize(#[from] FactorizeError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
