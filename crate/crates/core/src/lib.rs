//! Team offensive rating (ORTG) modeling from playtype profiles.
//!
//! Data flows `ingest` → `transform` → `model` → `eval` / `optimize`;
//! `service` and `cli` expose the same code paths over HTTP and the shell.

pub mod cli;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod io;
pub mod model;
pub mod optimize;
pub mod seed;
pub mod service;
pub mod transform;
