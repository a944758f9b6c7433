//! Cox partial-likelihood machinery: Kaplan–Meier, Newton–Raphson fitting with
//! Breslow ties, the Breslow baseline hazard, and residuals.

mod cox;
mod km;
mod residuals;

pub use cox::{
    fit_cox, fit_cox_with, partial_loglik_lp, CoxFit, CoxOptions, CoxProblem, RiskSetOrder,
};
pub use km::{kaplan_meier, km_estimator, Orientation};
pub use residuals::{
    deviance_from_martingale, null_deviance_residuals, residuals, schoenfeld_lp, ResidualSet,
};
