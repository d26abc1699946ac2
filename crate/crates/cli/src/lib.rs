//! Batch front end for the pressure-transport library: TOML-configured
//! runs, content-hashed artifact directories, CSV/JSON emission and the
//! acceptance battery.

pub mod config;
pub mod io;
pub mod runner;
pub mod suite;
