//! The `tasksets` command-line pipeline: simulate, analyze, embed, compare,
//! overlap, occupancy, switch, registry-dump and bench.

pub mod args;
pub mod commands;
pub mod error;
pub mod io;
pub mod manifest;
pub mod pipeline;

pub use args::Cli;
pub use commands::run;
pub use error::{Failure, Outcome};
