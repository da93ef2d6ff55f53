pub mod analysis;
pub mod chain;
pub mod env;
pub mod error;
pub mod experiments;
pub mod potential;
pub mod seeds;
pub mod walk;

pub use error::{Error, Result};
