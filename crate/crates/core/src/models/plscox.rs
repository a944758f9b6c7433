use ndarray::{s, Array1, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::pls::nipals::{column_slopes, deflate, row_slopes, stack};
use crate::pls::Preprocessing;
use crate::surv::{fit_cox_with, CoxOptions};

/// Weight and loading sequence built from per-variable Cox regressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxWeightPath {
    pub preprocessing: Preprocessing,
    pub weights: Array2<f64>,
    pub loadings: Array2<f64>,
    pub components: Array2<f64>,
    /// Stopped before the requested count because every weight was zero.
    pub truncated: bool,
}

impl CoxWeightPath {
    pub fn n_components(&self) -> usize {
        self.weights.ncols()
    }

    pub fn truncate(&self, k: usize) -> Self {
        let k = k.min(self.n_components());
        Self {
            preprocessing: self.preprocessing.clone(),
            weights: self.weights.slice(s![.., ..k]).to_owned(),
            loadings: self.loadings.slice(s![.., ..k]).to_owned(),
            components: self.components.slice(s![.., ..k]).to_owned(),
            truncated: self.truncated && k == self.n_components(),
        }
    }
}

struct VariableFit {
    coef: f64,
    p_value: f64,
}

/// Cox fit of the outcome on the previous components plus one residual column,
/// over the rows where that column is observed.
fn variable_fit(data: &SurvivalDataset, comps: &Array2<f64>, column: ndarray::ArrayView1<f64>, need_p: bool) -> VariableFit {
    let rows: Vec<usize> = (0..data.n()).filter(|&i| !column[i].is_nan()).collect();
    let none = VariableFit { coef: 0.0, p_value: 1.0 };
    if rows.len() < 2 {
        return none;
    }
    let h = comps.ncols();
    let mut design = Array2::zeros((rows.len(), h + 1));
    for (r, &i) in rows.iter().enumerate() {
        design.slice_mut(s![r, ..h]).assign(&comps.row(i));
        design[[r, h]] = column[i];
    }
    let times: Vec<f64> = rows.iter().map(|&i| data.times()[i]).collect();
    let status: Vec<bool> = rows.iter().map(|&i| data.status()[i]).collect();
    if !status.iter().any(|&s| s) {
        return none;
    }
    let fit = match fit_cox_with(&times, &status, &design, &Array1::zeros(h + 1), &CoxOptions::default()) {
        Ok(f) => f,
        Err(Error::MonotoneLikelihood { last }) => *last,
        Err(_) => return none,
    };
    let coef = fit.beta[h];
    if !coef.is_finite() {
        return none;
    }
    let p_value = if need_p {
        fit.wald_p_values().map(|p| p[h]).unwrap_or(1.0)
    } else {
        f64::NAN
    };
    VariableFit { coef, p_value }
}

/// Builds up to `m` components. With `significance`, weights whose Wald
/// p-value exceeds it are zeroed; when every weight is zeroed construction
/// stops.
pub fn cox_weight_path(data: &SurvivalDataset, m: usize, significance: Option<f64>) -> Result<CoxWeightPath> {
    if data.n_events() == 0 {
        return Err(Error::InvalidInput("no events".into()));
    }
    if let Some(a) = significance {
        if !(a > 0.0 && a <= 1.0) {
            return Err(Error::InvalidInput(format!("significance level must lie in (0, 1], got {a}")));
        }
    }
    let x = data.covariates();
    let (n, p) = x.dim();
    let preprocessing = Preprocessing::fit(x, true)?;
    let mut xr = preprocessing.apply(x)?;
    let mut weights = Vec::new();
    let mut loadings = Vec::new();
    let mut comps: Vec<Array1<f64>> = Vec::new();
    let mut truncated = false;

    for _ in 0..m {
        let previous = stack(&comps, n);
        let fits: Vec<VariableFit> = (0..p)
            .into_par_iter()
            .map(|j| variable_fit(data, &previous, xr.column(j), significance.is_some()))
            .collect();
        let mut w = Array1::from_iter(fits.iter().map(|f| match significance {
            Some(a) if !(f.p_value <= a) => 0.0,
            _ => f.coef,
        }));
        let norm = w.dot(&w).sqrt();
        if !(norm > 1e-12) {
            truncated = true;
            break;
        }
        w /= norm;
        let t = row_slopes(&xr, &w);
        if !(t.dot(&t) > 0.0) {
            truncated = true;
            break;
        }
        let load = column_slopes(&xr, &t);
        deflate(&mut xr, &t, &load);
        weights.push(w);
        loadings.push(load);
        comps.push(t);
    }
    Ok(CoxWeightPath {
        preprocessing,
        weights: stack(&weights, p),
        loadings: stack(&loadings, p),
        components: stack(&comps, n),
        truncated,
    })
}
