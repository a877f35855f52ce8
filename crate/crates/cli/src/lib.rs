//! Experiment harness: runs the nearest-symplectic-matrix, symplectic
//! eigenvalue and model-reduction experiments across the six
//! metric × retraction schemes and writes plot-ready CSV and JSON files.

pub mod config;
pub mod error;
pub mod mor;
pub mod output;
pub mod scheme;
pub mod sympev;
pub mod target;

pub use config::{Application, ExperimentConfig};
pub use error::{CliError, CliResult};
pub use mor::run_mor;
pub use scheme::Scheme;
pub use sympev::run_sympev;
pub use target::run_target;
