//! File formats, shipped mesh fixtures and run orchestration for the
//! `defdif` binary.
//!
//! Everything std-flavored lives here: VTK/CSV/report writers, the flat
//! key-value case-file format, and the sweep runner with its optional
//! row-level parallelism. The physics itself is in the `defdif` crate.

pub mod casefile;
pub mod fixtures;
pub mod output;
pub mod runner;
