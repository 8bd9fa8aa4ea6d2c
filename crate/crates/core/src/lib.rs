pub mod config;
pub mod cpab;
pub mod data;
pub mod error;
pub mod rng;

pub use error::{Error, Result};
pub mod prior;
pub mod activation;
pub mod nn;
pub mod experiments;
pub mod check;
pub mod cli;
