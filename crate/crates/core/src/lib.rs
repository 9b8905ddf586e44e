//! Non-Markovian reduced dynamics of open quantum systems coupled to a
//! hybrid environment of bosonic and fermionic baths.
//!
//! The pipeline for every model is: correlation [`kernels`] → coefficient
//! functions of the O/Q operators ([`coeffs`]) → a time-dependent
//! [`master`] equation → the reduced density-matrix trajectory. The
//! [`oracle`] integrates the Schrödinger equation of system plus few-mode
//! baths and serves as ground truth. [`models`] binds the worked models
//! together and [`config`] reads and writes their JSON description.

pub mod algebra;
pub mod coeffs;
pub mod config;
mod error;
pub mod io;
pub mod kernels;
pub mod master;
pub mod models;
pub mod oracle;

pub use error::{Error, Result};
