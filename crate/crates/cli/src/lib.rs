//! Library surface of the pipeline binary, so integration tests can drive
//! the same code paths the CLI executes.

pub mod config;
pub mod pipeline;
