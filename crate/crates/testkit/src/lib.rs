//! Fixture writers and synthetic signals shared by the test suites.
//!
//! Nothing in here depends on `acoustic-miner`: the container writers are
//! written from the format layouts directly so that decode tests compare the
//! library against an independent encoder.

pub mod flac;
pub mod scenario;
pub mod signal;
pub mod wav;

pub use scenario::{BurstArchive, BurstSpec};
