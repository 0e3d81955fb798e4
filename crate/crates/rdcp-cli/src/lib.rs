//! Experiment harness for the RDCP toolkit: seeded, parallel, and
//! byte-reproducible.

pub mod accept;
pub mod commands;
pub mod csvio;
pub mod runner;
