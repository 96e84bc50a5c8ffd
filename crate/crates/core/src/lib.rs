//! Censored survival fitting, intervention-threshold optimization and
//! Markov-chain intervention costs for recovery state machines.
//!
//! Module map:
//!
//! * [`distributions`] - survival families (pdf, survival, hazard, sampling)
//! * [`estimation`] - censored maximum likelihood
//! * [`threshold`] - expected downtime and the optimal waiting threshold
//! * [`markov`] - transition matrices and expected hitting times
//! * [`regression`] - per-point parameters from features
//! * [`joint`] - coupled thresholds on a four-state machine
//! * [`simulation`] - synthetic logs, replay and A/B tests
//! * [`io`] - CSV logs, model files and scenario configs

pub mod distributions;
pub mod error;
pub mod estimation;
pub mod io;
pub mod joint;
pub mod markov;
mod optim;
mod quadrature;
pub mod regression;
pub mod simulation;
pub mod threshold;

pub use distributions::{DistributionParams, Family, Kind};
pub use error::{Error, Result};
