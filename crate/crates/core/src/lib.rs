//! XPM and FWM noise on mixed 10G IMDD / 100G coherent dispersion-managed links, and a
//! guard-band planner built on superposition of single-pump noise traces.

// parameter checks are written `!(x > 0.0)` so that NaN fails them
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fiber;
pub mod link;
pub mod noise;
pub mod planner;
pub mod signal;
pub mod transceivers;
pub mod units;

pub use error::{Error, Result};
pub use rustfft::num_complex::Complex64;
