//! Scenario presets, config files and run orchestration.

pub mod config;
pub mod presets;
pub mod runner;

pub use config::{ModelKind, Perturbation, Scenario};
pub use presets::{list_presets, preset};
pub use runner::{convergence_study, execute, ConvergenceReport, FinalState, Manifest, RunOutcome};
