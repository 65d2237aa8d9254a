//! Command-line front end and local HTTP service for the trustmap engine.

pub mod commands;
pub mod error;
pub mod service;

pub use error::CliError;
