//! Rough transport noise for viscous conservation laws.
//!
//! Building blocks, bottom-up: [`roughpath`] (lifts and Chen composition),
//! [`sewing`], [`flow`] (rough flows and Feynman-Kac weights), [`drivers`]
//! (spectral fields and unbounded rough drivers), [`pde`] (solver and energy
//! diagnostics) and [`scenario`] (config-driven runs behind the CLI).

// `!(x > 0.0)` guards are kept so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::too_many_arguments)]

pub mod drivers;
pub mod error;
pub mod fit;
pub mod flow;
pub mod pde;
pub mod roughpath;
pub mod scenario;
pub mod sewing;
pub mod value;

pub use error::{Error, Result};
