//! Run configuration, file formats and orchestration for the `varint` binary.

pub mod config;
pub mod io;
pub mod run;
