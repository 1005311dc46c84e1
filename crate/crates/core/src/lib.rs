//! Link-level downlink MIMO toolkit.
//!
//! Generates tapped-delay-line fading channels, builds NR Type I and Type II
//! precoding codebooks, selects CSI reports (RI/PMI/CQI) with an effective-SINR
//! link abstraction, accounts PMI feedback overhead and runs SNR sweeps that
//! compare the codebook families against an SVD upper bound.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (default) and fall back to plain iterators otherwise.

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod codebook;
pub mod csi;
pub mod error;
pub mod linalg;
pub mod overhead;
pub mod par;
pub mod sim;

pub use error::{Error, Result};
pub use linalg::{CMat, C64};
