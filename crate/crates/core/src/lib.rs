//! Interference energy spectra of the 1-D infinite square well.
//!
//! Units throughout: ħ = 1 and 2M = 1. Lengths are in units of the well width
//! (default `L = 1`), energies in ħ²/2ML² and times in 2ML²/ħ. With these
//! conventions the eigenenergies of a well of width `D` are `π² l² / D²`.
//! Energies quoted as multiples of π² go through [`in_pi2`] for
//! display only; nothing is rescaled internally.
//!
//! Modules:
//! - [`wellcore`]: well geometry, eigenmodes, superposition states.
//! - [`zerofinder`]: transient and stationary zeros of Ψ(x, t).
//! - [`splitter`]: sudden splitting at zeros, change of basis, outcome tables, carpets.
//! - [`deltasolver`]: the well with a delta barrier, parametric in its strength.
//! - [`tdse`]: mesh simulation of a ramped Gaussian barrier with energy bookkeeping.
//! - [`accounting`]: barrier energy under three transition-probability models.

pub mod accounting;
pub mod compensated;
pub mod deltasolver;
mod error;
pub mod quadrature;
pub mod splitter;
pub mod tdse;
pub mod wellcore;
pub mod zerofinder;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use wellcore::{in_pi2, make_alpha_state, WellSegment, WellState, PI2};
