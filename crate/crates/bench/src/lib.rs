//! Simulation study driver: simulate, split, cross-validate, refit and score.

pub mod config;
pub mod plot;
pub mod report;
pub mod study;

pub use config::StudyConfig;
pub use report::emit_report;
pub use study::{run_study, Record, Status, StudyResult};
