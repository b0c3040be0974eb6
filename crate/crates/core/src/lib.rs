pub mod augment;
pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod fuzz;
pub mod index;
pub mod miner;
pub mod pool;
pub mod project;
pub mod select;
pub mod synth;
pub mod syntax;
pub mod toolchain;

pub use error::{Error, Result};
