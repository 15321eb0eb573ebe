//! Support library for the `gyrovortex` command-line driver: configuration
//! parsing and run-artifact serialization.

pub mod config;
pub mod output;
