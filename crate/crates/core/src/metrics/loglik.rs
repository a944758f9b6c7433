use serde::{Deserialize, Serialize};

use super::{check_lp, Outcomes};
use crate::error::{Error, Result};
use crate::surv::partial_loglik_lp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CvScheme {
    /// Partial likelihood of each held-out fold on its own risk sets.
    Naive,
    /// Full-data partial likelihood minus the training-part partial
    /// likelihood, both at the training fit.
    VanHouwelingen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvLoglik {
    pub value: f64,
    pub per_fold: Vec<f64>,
    /// Folds without events (naive term set to 0).
    pub eventless_folds: Vec<usize>,
}

/// One fold's contribution. `lp` is the training-fit predictor for every
/// row of `full`; `held_out` marks the fold.
pub fn fold_loglik_term(full: Outcomes<'_>, held_out: &[bool], lp: &[f64], scheme: CvScheme) -> Result<(f64, bool)> {
    check_lp(lp, full.len())?;
    if held_out.len() != full.len() {
        return Err(Error::DimensionMismatch("fold mask length differs from data".into()));
    }
    let pick = |want: bool| -> (Vec<f64>, Vec<bool>, Vec<f64>) {
        let mut t = Vec::new();
        let mut s = Vec::new();
        let mut l = Vec::new();
        for i in 0..full.len() {
            if held_out[i] == want {
                t.push(full.times[i]);
                s.push(full.status[i]);
                l.push(lp[i]);
            }
        }
        (t, s, l)
    };
    match scheme {
        CvScheme::Naive => {
            let (t, s, l) = pick(true);
            if !s.iter().any(|&e| e) {
                return Ok((0.0, true));
            }
            Ok((partial_loglik_lp(&t, &s, &l), false))
        }
        CvScheme::VanHouwelingen => {
            let (t, s, l) = pick(false);
            let whole = partial_loglik_lp(full.times, full.status, lp);
            Ok((whole - partial_loglik_lp(&t, &s, &l), false))
        }
    }
}

/// Cross-validated partial log-likelihood. `fold_of[i]` is the fold of row
/// `i`; `lp_for` receives the training rows of a fold and returns the
/// predictor of the resulting fit for every row.
pub fn cv_partial_loglik<F>(full: Outcomes<'_>, fold_of: &[usize], mut lp_for: F, scheme: CvScheme) -> Result<CvLoglik>
where
    F: FnMut(&[usize]) -> Result<Vec<f64>>,
{
    if fold_of.len() != full.len() {
        return Err(Error::DimensionMismatch("fold assignment length differs from data".into()));
    }
    let k = fold_of.iter().copied().max().map_or(0, |m| m + 1);
    if k < 2 {
        return Err(Error::InvalidInput("cross-validation needs at least two folds".into()));
    }
    let mut per_fold = Vec::with_capacity(k);
    let mut eventless_folds = Vec::new();
    for fold in 0..k {
        let held_out: Vec<bool> = fold_of.iter().map(|&f| f == fold).collect();
        let train: Vec<usize> = (0..full.len()).filter(|&i| !held_out[i]).collect();
        let lp = lp_for(&train)?;
        let (term, eventless) = fold_loglik_term(full, &held_out, &lp, scheme)?;
        if eventless {
            eventless_folds.push(fold);
        }
        per_fold.push(term);
    }
    Ok(CvLoglik { value: per_fold.iter().sum(), per_fold, eventless_folds })
}
