use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::cox::{fit_cox_with, CoxFit, CoxOptions, RiskSetOrder};
use crate::data::SurvivalDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualSet {
    pub martingale: Array1<f64>,
    pub deviance: Array1<f64>,
    /// One row per event, aligned with `event_rows`.
    pub schoenfeld: Array2<f64>,
    pub event_rows: Vec<usize>,
}

/// `sign(M)·sqrt(2{-M - δ log((δ - M)/δ)})`, with the log term taken as 0 when δ = 0.
pub fn deviance_from_martingale(m: f64, event: bool) -> f64 {
    let inner = if event { -m - (1.0 - m).ln() } else { -m };
    let mag = (2.0 * inner).max(0.0).sqrt();
    if m > 0.0 {
        mag
    } else if m < 0.0 {
        -mag
    } else {
        0.0
    }
}

pub fn residuals(fit: &CoxFit, data: &SurvivalDataset) -> Result<ResidualSet> {
    let x = data.covariates();
    if x.ncols() != fit.beta.len() || data.n() != fit.n {
        return Err(Error::DimensionMismatch(format!(
            "fit has {} coefficients on {} rows, data is {}x{}",
            fit.beta.len(),
            fit.n,
            data.n(),
            x.ncols()
        )));
    }
    let eta = fit.linear_predictor(x);
    let martingale = Array1::from_iter((0..data.n()).map(|i| {
        let expected = fit.baseline_cumhaz.eval(data.times()[i]) * eta[i].exp();
        (data.status()[i] as u8 as f64) - expected
    }));
    let deviance = Array1::from_iter(
        martingale.iter().zip(data.status()).map(|(&m, &s)| deviance_from_martingale(m, s)),
    );
    let (schoenfeld, event_rows) = schoenfeld_at(data.times(), data.status(), x, eta.as_slice().unwrap());
    Ok(ResidualSet { martingale, deviance, schoenfeld, event_rows })
}

/// Schoenfeld residuals `x_i - x̄(t_i)` with risk-set weights `exp(eta)`.
fn schoenfeld_at(times: &[f64], status: &[bool], x: &Array2<f64>, eta: &[f64]) -> (Array2<f64>, Vec<usize>) {
    let p = x.ncols();
    let order = RiskSetOrder::new(times);
    let shift = eta.iter().copied().fold(0.0, f64::max);
    let mut s0 = 0.0;
    let mut s1 = Array1::<f64>::zeros(p);
    let mut rows: Vec<(usize, Array1<f64>)> = Vec::new();
    for group in order.groups() {
        for &i in group {
            let w = (eta[i] - shift).exp();
            s0 += w;
            s1.scaled_add(w, &x.row(i));
        }
        for &i in group.iter().filter(|&&i| status[i]) {
            rows.push((i, &x.row(i) - &(&s1 / s0)));
        }
    }
    rows.sort_by_key(|(i, _)| *i);
    let mut out = Array2::zeros((rows.len(), p));
    for (k, (_, r)) in rows.iter().enumerate() {
        out.row_mut(k).assign(r);
    }
    (out, rows.into_iter().map(|(i, _)| i).collect())
}

/// Schoenfeld residuals of a scalar linear predictor used as the only
/// covariate, evaluated at coefficient `gamma`.
pub fn schoenfeld_lp(times: &[f64], status: &[bool], lp: &[f64], gamma: f64) -> Array1<f64> {
    let x = Array2::from_shape_vec((lp.len(), 1), lp.to_vec()).expect("column vector");
    let eta: Vec<f64> = lp.iter().map(|v| v * gamma).collect();
    schoenfeld_at(times, status, &x, &eta).0.column(0).to_owned()
}

/// Deviance residuals of the covariate-free Cox model.
pub fn null_deviance_residuals(data: &SurvivalDataset) -> Result<Array1<f64>> {
    let outcomes = data.outcomes_only();
    let fit = fit_cox_with(
        outcomes.times(),
        outcomes.status(),
        outcomes.covariates(),
        &Array1::zeros(0),
        &CoxOptions::default(),
    )?;
    Ok(residuals(&fit, &outcomes)?.deviance)
}
