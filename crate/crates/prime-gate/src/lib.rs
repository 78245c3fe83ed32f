//! Exact prime-counting engine and machine verification of explicit
//! prime-counting inequalities.
//!
//! The crate provides:
//!
//! * an exact prime engine (segmented sieve, sublinear counting, Chebyshev
//!   theta accumulation) that serves as the ground-truth oracle,
//! * verifiers for explicit bounds on `theta(x)` and `pi(x)` that certify a
//!   bound over a whole range by checking the breakpoints of the underlying
//!   step functions,
//! * certified upper bounds for the convexity-based integrals appearing in
//!   the bound derivations,
//! * extended-precision evaluation of the gap function
//!   `G(x) = pi(x)^2 - (e x / ln x) pi(x/e)` at astronomically large `x`,
//! * the splitting-constant threshold construction and its optimizer,
//! * an exhaustive scanner for integer violations of `G(x) < 0`.

pub mod engine;
pub mod highprec;
pub mod integral_bounds;
pub mod pi_bounds;
pub mod report;
pub mod scanner;
pub mod splitting;
pub mod theta_bounds;
pub mod walk;
pub mod wide;

pub mod cli;

pub use engine::{Engine, EngineConfig, PiMethod, PiSnapshot, PrimeBlock};
pub use report::InequalityReport;
pub use wide::WideReal;

/// Crate-wide error type.
#[derive(thiserror::Error, Debug)]
pub enum Error {
    /// A requested bound exceeds a configured capacity.
    #[error("{what}: requested {requested} exceeds limit {limit}")]
    Capacity {
        what: &'static str,
        requested: u64,
        limit: u64,
    },

    /// A range or argument lies outside an inequality's stated validity.
    #[error("domain error for {check}: requires {requirement}")]
    Domain {
        check: String,
        requirement: String,
    },

    /// Working precision cannot resolve a cancellation.
    #[error("precision {digits} digits insufficient: {detail}")]
    Precision { digits: u32, detail: String },

    /// Malformed request (unknown target, degenerate grid, bad argument).
    #[error("usage: {0}")]
    Usage(String),

    #[error("cache file: {0}")]
    CacheFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code per the reporting contract: 2 usage/domain,
    /// 3 capacity/precision.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Domain { .. } => 2,
            Error::Capacity { .. } | Error::Precision { .. } => 3,
            _ => 3,
        }
    }
}
