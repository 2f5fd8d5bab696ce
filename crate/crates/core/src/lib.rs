//! ODMR spectra of NV⁻ centers in diamond, from single crystals to
//! randomly oriented nanodiamond powders.
//!
//! The crate models the spin-1 ground state in an applied magnetic field,
//! enumerates the three transitions of every orientation together with
//! their ODMR intensity factor κ, averages over crystal or powder
//! orientation ensembles, and derives the quantities used to plan
//! frequency-swept hyperpolarization experiments:
//!
//! - [`spin`]: operators, Hamiltonian, 3×3 Jacobi eigensolver, transition
//!   enumeration, and single-quantum/overtone classification;
//! - [`ensemble`]: orientation sets (Gauss–Legendre powder quadrature,
//!   \[1 1 1\]/\[1 0 0\] crystals), stick spectra, Gaussian lineshapes,
//!   and 2D field–frequency maps;
//! - [`analysis`]: characteristic pattern widths, polarization density,
//!   and maximum integrated polarization per sweep window.
//!
//! Units are MHz and Gauss throughout; angles are radians. All operations
//! are pure functions of their inputs, and parallel evaluations reduce in
//! grid order, so identical inputs give identical outputs.

// index loops over both sides of 3×3 matrix expressions read better than
// iterator chains here
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod ensemble;
pub mod error;
pub mod spin;

pub use error::{Error, Result};
pub use spin::{ModelParams, NvCenter, TransitionClass};
