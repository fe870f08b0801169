//! Detection of relatively quasiconvex subgroups of relatively hyperbolic
//! groups at desk scale.

pub mod cli;
pub mod config;
pub mod detector;
pub mod error;
pub mod fixtures;
pub mod group;
pub mod metrics;
pub mod parabolics;
pub mod relcayley;
pub mod structures;
pub mod words;

pub use error::{Error, Result};
