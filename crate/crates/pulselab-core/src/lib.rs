//! Desk-scale virtual laboratory for closed-loop femtosecond pulse shaping.
//!
//! The crate is `no_std` with `alloc`. It covers the deterministic pulse
//! mathematics, the two-apparatus lab model, a surrogate halomethane
//! fragmentation model, a seeded genetic algorithm and the campaign drivers
//! (landscape scans, transfer studies, family matrices).
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod campaigns;
pub mod error;
pub mod fft;
pub mod ga;
pub mod grid;
pub mod lab;
pub mod phase;
pub mod stats;
pub mod substrate;
pub mod synth;

pub use error::{Error, Result};
pub use grid::SpectralGrid;
pub use phase::{PhaseMask, PolynomialPhase};
pub use synth::{SpectralField, TemporalField};
