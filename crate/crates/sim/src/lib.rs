//! Deterministic dual-link simulator for the LTE-WiFi split bearer.
//!
//! [`sim::run`] drives the `lwa-core` protocol engine over modelled LTE and
//! WiFi links from a [`Scenario`] and returns per-100 ms metrics.

pub mod channel;
pub mod metrics;
pub mod scenario;
pub mod sim;
pub mod traffic;

pub use metrics::{MetricsRecord, MetricsReport, Summary};
pub use scenario::{ConfigError, Scenario};
pub use sim::run;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("SDU {id} failed the integrity check ({failures} failures)")]
    Integrity { id: u64, failures: u64 },
    #[error("SDU accounting does not balance: {0:?}")]
    Accounting(Box<Summary>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
