//! Files, checkpoints, run directories and the command line around
//! `meshstyle-core`.

pub mod checkpoint;
pub mod cli;
pub mod clip;
pub mod config;
pub mod error;
pub mod imageio;
pub mod meshio;
pub mod run;

pub use error::{Error, Result};
