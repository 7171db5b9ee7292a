//! Pseudospectral toolkit for dispersion-generalized KP-I equations
//! `∂_t u − ∂_x D_x^α u − ∂_x^{−1}Δ_y u = ∂_x(u²)` on anisotropic tori in
//! three spatial dimensions.
//!
//! The crate provides:
//! * spectral fields, transforms and dyadic band projections ([`field`],
//!   [`bands`]);
//! * the dispersion relation, resonance analysis and free propagator
//!   ([`dispersion`]);
//! * anisotropic norms, the Hamiltonian, and frequency envelopes ([`norms`]);
//! * an integrating-factor RK4 evolver with Galerkin truncation and the
//!   second Picard iterate ([`evolve`]);
//! * the scaling symmetry and flow-commutation checks ([`scaling`]);
//! * the two-box norm-inflation laboratory ([`illposed`]);
//! * Monte-Carlo benchmarks of Strichartz/bilinear/Leibniz estimates
//!   ([`bench`]);
//! * snapshot and report serialization ([`snapshot`], [`report`]).
//!
//! All numerics are generic over the scalar type via the [`scalar::Real`]
//! trait; the aliases below fix `f64`, which is what the CLI and the file
//! formats use.

// Validation guards are written `!(x >= limit)` on purpose: unlike the
// un-negated comparison, the form rejects NaN inputs.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bands;
pub mod bench;
pub mod dispersion;
pub mod domain;
pub mod error;
pub mod evolve;
pub mod field;
pub mod illposed;
pub mod norms;
pub mod report;
pub mod scalar;
pub mod scaling;
pub mod snapshot;

pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision domain specification.
pub type DomainSpec64 = domain::DomainSpec<f64>;
/// Double-precision grid.
pub type Grid64 = domain::Grid<f64>;
/// Double-precision spectral field.
pub type SpectralField64 = field::SpectralField<f64>;
