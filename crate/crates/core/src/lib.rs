//! Compiles time-triggered temporal plans (PDDL 2.1 durative actions) into a
//! simple temporal network and then a behavior tree, and executes that tree
//! against pluggable action performers.
//!
//! The crate is `no_std` with `alloc`. File IO, clocks backed by the OS and
//! the command line live in the `stnbt` companion crate.
#![no_std]
extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bt;
pub mod causal;
pub mod executor;
pub mod fixtures;
pub mod generate;
pub mod pddl;
pub mod simple_plan;
pub mod stn;
pub mod time;

pub use time::Millis;
