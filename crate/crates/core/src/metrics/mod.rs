//! Cross-validation criteria and performance measures for censored
//! predictions.

mod auc;
mod concordance;
mod error_curve;
mod loglik;
mod measure;
mod r2;

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::step::StepFunction;
use crate::surv::kaplan_meier;

pub use auc::{auc_grid, iauc, AucEstimator, AucInput, IaucResult};
pub use concordance::{concordance, ConcordanceKind, ConcordanceResult};
pub use error_curve::{
    error_grid, integrate_curve, km_survival_matrix, prediction_error_curve, r2_prediction_error, CurveKind,
    PredictionErrorCurve,
};
pub use loglik::{cv_partial_loglik, fold_loglik_term, CvLoglik, CvScheme};
pub use measure::{evaluate, Criterion, Direction, Evaluation, Measure, Prediction};
pub use r2::{r2_likelihood, R2Kind};

/// Lower bound applied to censoring-survival weights.
pub const CENSORING_FLOOR: f64 = 0.05;

/// Times and event indicators, without covariates.
#[derive(Debug, Clone, Copy)]
pub struct Outcomes<'a> {
    pub times: &'a [f64],
    pub status: &'a [bool],
}

impl<'a> Outcomes<'a> {
    pub fn new(times: &'a [f64], status: &'a [bool]) -> Result<Self> {
        if times.len() != status.len() {
            return Err(Error::DimensionMismatch(format!("{} times, {} status values", times.len(), status.len())));
        }
        Ok(Self { times, status })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_events(&self) -> usize {
        self.status.iter().filter(|&&s| s).count()
    }

    pub fn max_time(&self) -> f64 {
        self.times.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn survival_km(&self) -> Result<StepFunction> {
        kaplan_meier(self.times, self.status)
    }

    pub fn censoring_km(&self) -> Result<StepFunction> {
        let jumps: Vec<bool> = self.status.iter().map(|s| !s).collect();
        kaplan_meier(self.times, &jumps)
    }
}

impl<'a> From<&'a SurvivalDataset> for Outcomes<'a> {
    fn from(d: &'a SurvivalDataset) -> Self {
        Self { times: d.times(), status: d.status() }
    }
}

/// Floors a censoring-survival value; the flag reports whether it bit.
fn floored(g: f64) -> (f64, bool) {
    if g < CENSORING_FLOOR {
        (CENSORING_FLOOR, true)
    } else {
        (g, false)
    }
}

fn check_lp(lp: &[f64], n: usize) -> Result<()> {
    if lp.len() != n {
        return Err(Error::DimensionMismatch(format!("{} predictions for {} observations", lp.len(), n)));
    }
    if lp.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("linear predictor must be finite".into()));
    }
    Ok(())
}
