use alloc::string::String;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("stochasticity violated: residual {residual:e}")]
    Stochasticity { residual: f64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("rank {found} below required {required}")]
    Rank { required: usize, found: usize },
    #[error("no certified dark subspace found after {probes} probes; try a longer chain")]
    Discovery { probes: usize },
    #[error("problem too large: {0}")]
    Size(String),
    #[error("subspace missing from isometry family")]
    MissingEntry,
    #[error("induced map is not unitary on the subspace (residual {residual:e})")]
    DarknessViolation { residual: f64 },
    #[error("{unreached} subspace(s) not reachable within the word budget")]
    Reachability { unreached: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
