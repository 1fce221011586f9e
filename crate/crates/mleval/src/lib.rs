//! Dataset formats, reports, the HTTP API and the command line for
//! evaluating multi-label classifiers. Computation lives in `mleval-core`.

pub mod api;
pub mod archive;
pub mod cli;
pub mod error;
pub mod export;
pub mod format;
pub mod ingest;
pub mod report;
pub mod store;
