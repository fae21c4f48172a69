//! Repeated interaction quantum systems at finite dimension.
//!
//! A small system `S` interacts for a time `τ` with each element `E` of a chain
//! in turn. This crate builds the GNS-doubled description of such a system,
//! its reduced dynamics operator `M = P e^{iτK} P`, the asymptotic state and
//! its energy and entropy production, and checks them against an exact
//! density-matrix simulation of `S` plus a finite chain.

pub mod chainsim;
pub mod error;
pub mod gns;
pub mod numerics;
pub mod reduced;
pub mod sforacle;
pub mod thermo;

pub use error::{Error, NotErgodicReason, Result};
pub use num_complex::Complex64 as C64;
