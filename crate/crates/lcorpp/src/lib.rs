//! File formats, experiment suites and the command-line driver built on
//! `lcorpp-core`.

pub mod cli;
pub mod experiments;
pub mod io;
