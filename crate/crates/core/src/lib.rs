//! Memristor relaxation oscillators, their phase-reduced models, and
//! oscillatory associative memory built from them.
//!
//! Pipeline: [`memristor`] DC analysis, [`transient`] circuit simulation,
//! [`ppv`] phase response and PPV extraction, [`phasenet`] phase-domain
//! networks, [`onn`] pattern recognition. [`cli`] drives all of it from a
//! TOML config.

// `!(x > 0.0)` is used on purpose so NaN fails validation; indexed loops
// keep the integrator stages readable.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bench;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod memristor;
pub mod ode;
pub mod onn;
pub mod phasenet;
pub mod ppv;
pub mod transient;

pub use error::{Error, Result};
