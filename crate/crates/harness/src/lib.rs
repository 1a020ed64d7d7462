//! Experiment drivers for the weak-KAM laboratory: closed-form kernels for
//! integrable drifts, rate studies, the tent sharpness example, the
//! ergodization probe, artifact I/O and the `wkam` command line.

pub mod analytic;
pub mod cli;
pub mod config;
pub mod ergodize;
pub mod error;
pub mod io;
pub mod rates;
pub mod sharpness;

pub use cli::run_cli;
pub use config::ExperimentConfig;
pub use error::{HarnessError, Result};
