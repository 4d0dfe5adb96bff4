pub mod cli;
pub mod error;
pub mod fss;
pub mod harness;
pub mod models;
pub mod multistage;
pub mod numeric;
pub mod ratefn;
pub mod rng;
pub mod sampler;

pub use error::{Error, Result};
