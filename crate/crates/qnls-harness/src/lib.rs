//! Scenario harness for the quintic NLS laboratory: configuration,
//! initial-data construction, run execution and persistence, the static
//! identity suite, and the field file formats used by the CLI.

pub mod config;
pub mod fieldio;
pub mod identities;
pub mod runner;
pub mod writer;
