use thiserror::Error;

/// Errors raised by the discrete weak-KAM machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("interval mismatch: first kernel ends at {left_end}, second starts at {right_start}")]
    IntervalMismatch { left_end: f64, right_start: f64 },

    #[error("disconnected kernel: v_max*dt = {reach} is below the grid spacing {spacing}")]
    DisconnectedKernel { reach: f64, spacing: f64 },

    #[error("analytic minimal action is not available for the {0} model")]
    UnsupportedModel(&'static str),

    #[error("Legendre transform did not converge inside the velocity ball of radius {radius}")]
    LegendreNonConvergence { radius: f64 },

    #[error("integration step rejected at t = {time}: local error {estimate:e} exceeds {tolerance:e}")]
    StepRejected {
        time: f64,
        estimate: f64,
        tolerance: f64,
    },

    #[error("iterate overflow: |value| = {0:e} exceeds the guard")]
    Overflow(f64),

    #[error("critical value estimate drifts: {full} at the full probe vs {half} at the half probe")]
    NonCauchyDrift { full: f64, half: f64 },

    #[error("no convergence after {periods} periods (last residual {last_residual:e})")]
    NonConvergence {
        periods: usize,
        last_residual: f64,
        residuals: Vec<f64>,
    },

    #[error("empty representative set")]
    EmptyRepresentatives,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
