pub mod error;
pub mod quadrature;
pub mod rng;
pub mod families;
pub mod channels;
pub mod perturbations;
pub mod contraction;
pub mod special;
pub mod protocols;
pub mod harness;

pub use error::{Error, Result};
