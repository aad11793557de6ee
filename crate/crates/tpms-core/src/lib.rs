//! Numerical construction of triply periodic minimal surfaces whose vertical
//! symmetry planes cut them into simply connected, vertically periodic pieces.
//!
//! The pipeline:
//!
//! 1. [`theta`] evaluates the Jacobi theta function on rectangular tori.
//! 2. [`divisor`] describes the boundary data of a periodic polygon: points on
//!    the two edges of a parallel strip together with exponents.
//! 3. [`scmap`] evaluates the associated Schwarz-Christoffel integrand (the
//!    Gauss map, a product of theta-function powers) and integrates it along
//!    paths in the strip.
//! 4. [`weierstrass`] turns the Gauss map and the height differential `dz`
//!    into sampled minimal surface patches.
//! 5. [`catalog`] enumerates the constructible families (basic, equal-sign,
//!    opposite-sign, Neovius, spout) with their exact exponent patterns and
//!    linear constraints.
//! 6. [`period`] closes the periods: 1-d bisection for the two-corner
//!    families, damped Newton for the higher-dimensional ones, and a scan
//!    showing that the four-corner candidate with signs `(-,-,+,+)` never
//!    closes.
//! 7. [`assembly`] replicates a fundamental patch by a Euclidean triangle
//!    group into a triply periodic triangle mesh.
//! 8. [`io`] provides the job configuration, exporters and the verification
//!    harness behind the command line interface.

pub mod assembly;
pub mod catalog;
pub mod divisor;
pub mod io;
pub mod par;
pub mod period;
pub mod quad;
pub mod scmap;
pub mod theta;
pub mod verify;
pub mod weierstrass;

pub use divisor::{DivisorSpec, SymmetricDivisorSpec};
pub use theta::TorusParams;

use thiserror::Error;

/// Crate-wide error type aggregating the per-module failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Theta(#[from] theta::ThetaError),
    #[error(transparent)]
    Divisor(#[from] divisor::DivisorError),
    #[error(transparent)]
    Quad(#[from] quad::QuadError),
    #[error(transparent)]
    Sc(#[from] scmap::ScError),
    #[error(transparent)]
    Surface(#[from] weierstrass::SurfaceError),
    #[error(transparent)]
    Catalog(#[from] catalog::CatalogError),
    #[error(transparent)]
    Period(#[from] period::PeriodError),
    #[error(transparent)]
    Assembly(#[from] assembly::AssemblyError),
    #[error(transparent)]
    Config(#[from] io::ConfigError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
