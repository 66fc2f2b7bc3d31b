//! Configuration and artifact handling for the `zrec` command-line tool.

pub mod config;
pub mod output;
