//! Single-pilot beam training with true-time-delay receive arrays.
//!
//! The crate covers codebook synthesis for analog, hybrid and digital
//! architectures ([`array`]), clustered wideband channels ([`channel`]),
//! tap errors, AGC and ADC quantization ([`impairments`]), power-based
//! angle-of-arrival estimation ([`training`]), delay-range feasibility
//! ([`hardware`]), baseband power budgets ([`power`]) and Monte-Carlo
//! experiment orchestration ([`experiment`]).
//!
//! Trials run on a rayon pool when the `parallel` feature is enabled (the
//! default). Every trial draws from its own seeded generators, so sequential
//! and parallel runs give identical results.

pub mod array;
pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod hardware;
pub mod impairments;
pub mod power;
pub mod stats;
pub mod training;

pub use config::{Architecture, SystemConfig};
pub use error::{Error, Result};

/// How Monte-Carlo trials are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Uses rayon when the `parallel` feature is on, otherwise sequential.
    #[default]
    Parallel,
}

impl Execution {
    /// The mode that will actually run.
    pub fn effective(self) -> Execution {
        if cfg!(feature = "parallel") {
            self
        } else {
            Execution::Sequential
        }
    }
}
