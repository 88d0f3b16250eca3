//! Fundamental bounds on the photoisomerization yield of a molecular switch
//! modeled as a three-level system in contact with a thermal bath.
//!
//! The crate provides:
//!
//! * thermal systems, population vectors and β-orderings ([`thermo`]);
//! * thermomajorization curves and the induced partial order ([`curve`]);
//! * Gibbs-stochastic matrices, thermal rate matrices, spectra and the
//!   embeddability classifier ([`gibbs`]);
//! * two-level thermalizations and a reachability search for continuous
//!   thermomajorization ([`markov`]);
//! * closed-form yield bounds with independent brute-force oracles
//!   ([`bounds`]);
//! * the verification suites behind the `verify` CLI command ([`checks`]).
//!
//! Energies are dimensionless throughout (measured in units of the inverse
//! temperature), so a level at energy `e` carries Gibbs weight `exp(-e)`.
//! The distinguished value `f64::INFINITY` marks a level with Gibbs weight
//! exactly zero.

pub mod bounds;
pub mod checks;
pub mod curve;
mod error;
pub mod gibbs;
pub mod json;
pub mod markov;
pub mod thermo;

pub use curve::{build_curve, thermomajorizes, ThermoCurve};
pub use error::Error;
pub use gibbs::{GibbsStochasticMatrix, Gs3Params, Gs4Params, RateMatrix};
pub use markov::{ReachOptions, ReachabilityResult, ThermalizationStep};
pub use thermo::{beta_order, BetaOrdering, PhotoisomerInstance, PopulationVector, ThermalSystem};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
