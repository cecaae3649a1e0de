//! Command-line front end of the `bihscat` library.

pub mod commands;
pub mod config;
pub mod error;
pub mod selftest;
