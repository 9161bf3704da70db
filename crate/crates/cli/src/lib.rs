//! Command-line front end and HTTP correction service.

pub mod cli;
pub mod commands;
pub mod config;
pub mod service;

pub use cli::{run, EXIT_FAILURE, EXIT_OK, EXIT_USAGE};
