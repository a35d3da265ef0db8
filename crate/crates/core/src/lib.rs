//! Port-scan detection with a from-scratch random forest.
//!
//! The crate is organised around the trial pipeline: flow data is loaded or
//! generated ([`dataset`], [`scangen`]), partitioned with stratification,
//! searched over hyperparameter sets with cross-validation ([`tuning`]),
//! fitted as a bagged tree ensemble ([`forest`]) and scored ([`metrics`]).
//! [`report`] holds the versioned JSON documents shared with the CLI.

pub mod dataset;
pub mod forest;
pub mod metrics;
pub mod report;
pub mod scangen;
pub mod seed;
pub mod tuning;

pub use dataset::{Dataset, FlowRecord, Label, Technique, Tool};
pub use forest::{ForestModel, HyperparamSet};
