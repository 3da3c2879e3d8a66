//! Crate-wide error type.
//!
//! Variants are grouped by how a front end should react: `Domain`,
//! `Precondition`, and `BadInput` are usage errors; `Inconclusive`,
//! `Divergent`, and `Quadrature` are numerical outcomes.

use crate::quadrature::QuadratureError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    /// A mathematical domain violation: t <= 0, p <= 1, query outside a
    /// tabulated weight's range, and the like.
    #[error("domain error: {0}")]
    Domain(String),
    /// A stated hypothesis of the inequality or lemma being evaluated fails;
    /// the message names the hypothesis.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// A three-way numerical verdict could not decide at the configured
    /// probe depth.
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    /// An integral that must be finite for the computation to mean anything
    /// is divergent.
    #[error("divergent: {0}")]
    Divergent(String),
    /// Malformed user-supplied data: test-function grids, corpora, configs.
    #[error("invalid input: {0}")]
    BadInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
