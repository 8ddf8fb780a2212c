use thiserror::Error;

use crate::lattice::AlgebraReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice size {size}: must be at least {min}")]
    InvalidSize { size: usize, min: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{method} evaluation does not support L = {size} (maximum {max})")]
    UnsupportedSize {
        method: &'static str,
        size: usize,
        max: usize,
    },

    #[error("transfer state space of {states} states exceeds the configured bound {bound}")]
    Resource { states: usize, bound: usize },

    #[error("series is empty")]
    EmptySeries,

    #[error("jackknife needs at least {min} bins, got {got}")]
    TooFewBins { got: usize, min: usize },

    #[error("stiffness table does not bracket a crossing with the line {slope}·T")]
    NoBracket { slope: f64 },

    #[error("{what} {value} lies outside the table range [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("code algebra check failed:\n{0}")]
    Algebra(Box<AlgebraReport>),
}
