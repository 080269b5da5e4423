//! Katz-index link prediction for temporal, geolocated, directed networks.
//!
//! The crate covers the whole experiment: ingesting movement records into a
//! [`graph::TemporalNetwork`], splitting it chronologically, scoring candidate
//! pairs with the plain, weighted and edge-weighted Katz indices
//! ([`katz`]), and evaluating the scores with threshold-tuned confusion
//! matrices, ROC and precision-recall curves ([`eval`]). [`synth`] generates
//! seeded spatial movement networks for running all of it without real data.

pub mod error;
pub mod eval;
pub mod format;
pub mod geo;
pub mod graph;
pub mod katz;
pub mod synth;

pub use error::{Error, ErrorKind, Result};
