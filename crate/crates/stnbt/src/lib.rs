//! Standard-library side of the plan compiler: reading instances from disk,
//! artifact formats, a wall-clock runner, benchmarking and the pieces the
//! `stnbt` binary is assembled from.

pub mod bench;
pub mod formats;
pub mod pipeline;
pub mod wall;

pub use stnbt_core as core;
