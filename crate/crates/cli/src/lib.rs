//! Configuration handling and subcommands behind the `mmwvr` binary.

pub mod commands;
pub mod config;
