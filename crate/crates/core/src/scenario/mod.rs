//! Scenario capture, logging, replay and analysis.

pub mod scene;
pub mod similarity;
pub mod log;
pub mod analysis;
