//! Model-free continuous optimizers over the unit cube.

pub mod linalg;
mod nelder_mead;
mod trust_region;

pub use nelder_mead::{NelderMead, NelderMeadOptions};
pub use trust_region::{DiagonalModel, TrustRegion, TrustRegionOptions, MAX_RADIUS};
