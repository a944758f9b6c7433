//! Partial-least-squares extensions of the Cox proportional hazards model for
//! right-censored data, with the cross-validation criteria, performance
//! measures and simulation generators used to compare them.

pub mod cv;
pub mod data;
pub mod error;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod models;
pub mod pls;
pub mod simulate;
pub mod step;
pub mod surv;

pub use data::SurvivalDataset;
pub use error::{Error, Result};
pub use step::StepFunction;
