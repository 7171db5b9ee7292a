//! Error type shared across the toolkit.

use thiserror::Error;

/// Everything that can go wrong while building domains, transforming fields,
/// or running experiments.
#[derive(Debug, Error)]
pub enum Error {
    /// Domain parameters violate an invariant (α range, λ range, grid sizes).
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    /// Two fields (or a field and a mask) live on incompatible grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A dyadic parameter is not a power of two, or a band does not fit on
    /// the grid.
    #[error("invalid band: {0}")]
    InvalidBand(String),

    /// Invalid experiment or solver configuration.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The solution left the trusted regime (amplitude guard tripped).
    #[error("blow-up guard tripped: |u|_inf = {linf:.3e} at t = {t:.6e} exceeds {guard:.3e}")]
    BlowUp { t: f64, linf: f64, guard: f64 },

    /// An adaptive quadrature or iteration failed to reach its tolerance.
    #[error("did not converge: reached {achieved:.3e}, wanted {wanted:.3e}")]
    DidNotConverge { achieved: f64, wanted: f64 },

    /// The dual lattice of the validating grid misses one of the requested
    /// frequency boxes entirely.
    #[error("frequency box not resolved by the dual lattice: {0}")]
    BoxNotResolved(String),

    /// No sampled pair of lattice points in the requested bands satisfies the
    /// resonance condition; the benchmark cell is reported and skipped.
    #[error("empty resonant support for bands: {0}")]
    EmptyResonantSupport(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Malformed snapshot or diagnostics file.
    #[error("malformed file: {0}")]
    MalformedFile(String),
}

impl Error {
    /// True for failures of the numerics themselves (as opposed to bad input
    /// or I/O); the CLI maps these to a distinct exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::BlowUp { .. }
                | Error::DidNotConverge { .. }
                | Error::EmptyResonantSupport(_)
                | Error::BoxNotResolved(_)
        )
    }
}

/// Crate-wide result alias.
pub type Result<T, E = Error> = std::result::Result<T, E>;
