//! Quarter-plane diffraction by a Dirichlet quarter-plane: two-complex-variable
//! Wiener-Hopf machinery.

pub mod complexcore;
pub mod error;

pub use complexcore::{Params, SheetTag, C64};
pub use error::{Result, WhError};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod linalg;
pub mod quad;
pub mod contours;
pub mod wh1d;
pub mod sumsplit;
pub mod spectral;
pub mod continuation;
pub mod crossing;
pub mod field;
pub mod uniqueness;
