//! Experiment harness for the secure spatial modulation laboratory:
//! configuration, reproducible runners, and CSV/metadata output.

pub mod config;
pub mod output;
pub mod runners;
