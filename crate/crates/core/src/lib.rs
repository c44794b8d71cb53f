//! Max 2CSP-R approximation through a vector-program relaxation and
//! Gaussian shortlist rounding.

pub mod error;
pub mod exact;
pub mod gaussian;
pub mod harness;
pub mod instances;
pub mod rounding;
pub mod sdp;

pub use error::{Error, Result};
