//! File formats, run manifests, and parallel execution for the
//! room-level localization toolkit. The pipeline itself lives in
//! `roomloc-core`; the `roomloc` binary wires both together.

pub mod cli;
pub mod formats;
pub mod manifest;
pub mod parallel;
