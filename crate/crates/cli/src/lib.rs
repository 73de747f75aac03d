//! Command-line front end for the `atscan` library: run configuration,
//! pipeline orchestration and deterministic run manifests.

pub mod config;
pub mod manifest;
pub mod pipeline;
