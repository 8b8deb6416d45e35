//! Numerical toolkit for boundary observability and control of waves on a
//! degenerate gas-giant atmosphere model.

pub mod bessel;
mod dd;
pub mod design;
pub mod error;
pub mod linalg;
pub mod modal;
pub mod params;
pub mod tangential;
pub mod waves;

pub use error::{Error, Result};
pub use params::{Convention, GasGiantParams};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
