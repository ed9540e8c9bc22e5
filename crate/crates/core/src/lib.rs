//! Spin-boson dynamics with hierarchical equations of motion.
//!
//! A two-level system driven by a classical field couples to a bosonic bath
//! whose spectral density is a sum of four-pole Lorentzians. The crate
//! expands the bath correlation function into exponentials, propagates the
//! hierarchy of auxiliary density operators, reconstructs the dynamical map
//! to evaluate non-Markovianity witnesses, and shapes the field with a
//! monotonic optimal-control iteration.
//!
//! Everything internal is in atomic units; see [`units`] for conversions.

pub mod bath;
pub mod config;
pub mod error;
pub mod hierarchy;
pub mod oct;
pub mod ops;
pub mod output;
pub mod pipeline;
pub mod quadrature;
pub mod units;
pub mod witness;

pub use error::{ErrorClass, HeomError, Result};
