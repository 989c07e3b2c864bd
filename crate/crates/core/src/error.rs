use thiserror::Error;

use crate::instance::Violation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid instance: {}", join_violations(.0))]
    InvalidInstance(Vec<Violation>),

    #[error("malformed instance file: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("unknown generator kind `{0}` (expected uniform-random, same-order-additive, same-order-multiplicative or supplier-uniform)")]
    UnknownKind(String),

    #[error("{what}: size {got} exceeds the limit {limit}")]
    SizeLimit {
        what: &'static str,
        limit: usize,
        got: usize,
    },

    #[error("index {index} out of range for a side of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("customer {0} is already in the set")]
    AlreadyInSet(usize),

    #[error("revenues are not normalized: max r = {0} > 1")]
    NotNormalized(f64),

    #[error("separation oracle failed: {0}")]
    Oracle(String),

    #[error("lp solver: {0}")]
    Lp(#[from] crate::simplex::LpError),

    #[error("lp is {0}")]
    LpStatus(&'static str),

    #[error("ellipsoid breakdown at iteration {iteration}: a'Da = {quad_form:e} ({detail})")]
    EllipsoidBreakdown {
        iteration: u64,
        quad_form: f64,
        detail: String,
    },

    #[error("marginal row is infeasible: {0}")]
    InfeasibleMarginals(String),

    #[error("negative probability {value:e} for assortment {set}")]
    NegativeProbability { value: f64, set: String },

    #[error("no same-order certificate: suppliers do not rank customers in a common order")]
    MissingCertificate,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_size(what: &'static str, got: usize, limit: usize) -> Result<()> {
    if got > limit {
        Err(Error::SizeLimit { what, limit, got })
    } else {
        Ok(())
    }
}
