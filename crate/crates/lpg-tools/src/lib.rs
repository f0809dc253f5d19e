//! IO, file formats, synthetic data, and the command implementations
//! behind the `lpg` binary. The algorithmic core lives in `lpg-core`;
//! this crate only adds the plumbing around it.

pub mod commands;
pub mod config;
pub mod formats;
pub mod parallel;
pub mod synth;
