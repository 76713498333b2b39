use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension-like number {0} must exceed 2")]
    DegenerateDimension(f64),

    #[error("invalid exponent p = {p}: {reason}")]
    InvalidExponent { p: f64, reason: String },

    #[error("hessian spectrum requested at the origin; use the origin limit")]
    AtOrigin,

    #[error("radius {r} outside profile range [0, {max}]")]
    OutOfRange { r: f64, max: f64 },

    #[error("profile has no {0} event")]
    MissingEvent(&'static str),

    #[error("integration failed at r = {r}: {reason}")]
    Integration { r: f64, reason: String },

    #[error("bracket violated: p = {lo} classified {lo_outcome}, p = {hi} classified {hi_outcome}")]
    BracketViolated {
        lo: f64,
        hi: f64,
        lo_outcome: String,
        hi_outcome: String,
    },

    #[error("supercritical exponent p = {p} (p* = {p_star}): no solution")]
    Supercritical { p: f64, p_star: f64 },

    #[error("ordering p*- < (N+2)/(N-2) < p*+ violated: {0}")]
    OrderingViolated(String),

    #[error("equilibrium undefined: lambda1 = {0} is not negative")]
    NoEquilibrium(f64),

    #[error("divergent tail: integrand exponent {0} is not below -1")]
    DivergentTail(f64),

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
