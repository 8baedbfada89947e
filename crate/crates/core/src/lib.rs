//! Asymmetric two-slit interference with an unambiguous which-path detector.
//!
//! The crate computes the detector's discriminating measurement, the
//! distinguishability/visibility trade-off for unequal slits, the screen
//! intensity for each detector outcome, and Monte Carlo detection records
//! that can be sorted by outcome.

pub mod cli;
pub mod duality;
pub mod error;
pub mod experiment;
pub mod fringes;
pub mod model;
pub mod montecarlo;
pub mod optics;
pub mod output;
pub mod sweep;
pub mod uqsd;

pub use duality::{evaluate_duality, DualityReport, QuantonDetectorState};
pub use error::{Error, Result};
pub use experiment::Experiment;
pub use model::{Case, ExperimentConfig, PathAmplitudes};
pub use optics::{Conditioning, IntensityPattern, Mode};
