//! Experimental modal analysis from snapshot data.
//!
//! Natural frequencies, damping ratios and mode shapes are extracted with
//! exact dynamic mode decomposition ([`dmd`]). The Ibrahim time-domain method
//! ([`itd`]) gives an independent route to the same eigenvalues, and a
//! least-squares complex-frequency fit ([`lscf`]) serves as a frequency-domain
//! baseline. [`synth`] generates analytic benchmark structures and [`modal`]
//! compares and stabilises the identified poles.

// `!(x > 0.0)` style guards are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dmd;
pub mod error;
pub mod io;
pub mod itd;
pub mod lscf;
pub mod modal;
pub mod numkit;
pub mod snapshots;
pub mod synth;

pub use error::{Error, Result};
pub use num_complex::Complex64;
