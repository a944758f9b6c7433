//! Right-censored survival data with an optional-missing covariate matrix.
//!
//! Missing covariate cells are stored as `NaN`.

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalDataset {
    times: Vec<f64>,
    status: Vec<bool>,
    covariates: Array2<f64>,
    ids: Vec<String>,
}

impl SurvivalDataset {
    pub fn new(times: Vec<f64>, status: Vec<bool>, covariates: Array2<f64>) -> Result<Self> {
        let ids = (0..times.len()).map(|i| format!("obs{}", i + 1)).collect();
        Self::with_ids(times, status, covariates, ids)
    }

    pub fn with_ids(
        times: Vec<f64>,
        status: Vec<bool>,
        covariates: Array2<f64>,
        ids: Vec<String>,
    ) -> Result<Self> {
        let n = times.len();
        if status.len() != n || covariates.nrows() != n || ids.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "times {}, status {}, covariate rows {}, ids {}",
                n,
                status.len(),
                covariates.nrows(),
                ids.len()
            )));
        }
        if let Some(i) = times.iter().position(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::InvalidInput(format!(
                "time at row {} is {} (must be positive and finite)",
                i, times[i]
            )));
        }
        if covariates.iter().any(|v| v.is_infinite()) {
            return Err(Error::InvalidInput("infinite covariate value".into()));
        }
        Ok(Self { times, status, covariates, ids })
    }

    /// Status given as 0/1 integers.
    pub fn from_status_codes(times: Vec<f64>, codes: &[u8], covariates: Array2<f64>) -> Result<Self> {
        let status = codes
            .iter()
            .enumerate()
            .map(|(i, &c)| match c {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::InvalidInput(format!("status {} at row {} not in {{0,1}}", other, i))),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(times, status, covariates)
    }

    pub fn n(&self) -> usize {
        self.times.len()
    }

    pub fn p(&self) -> usize {
        self.covariates.ncols()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn status(&self) -> &[bool] {
        &self.status
    }

    pub fn covariates(&self) -> &Array2<f64> {
        &self.covariates
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn n_events(&self) -> usize {
        self.status.iter().filter(|&&s| s).count()
    }

    pub fn has_missing(&self) -> bool {
        self.covariates.iter().any(|v| v.is_nan())
    }

    pub fn times_array(&self) -> Array1<f64> {
        Array1::from(self.times.clone())
    }

    /// Row subset, in the order given.
    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            times: rows.iter().map(|&i| self.times[i]).collect(),
            status: rows.iter().map(|&i| self.status[i]).collect(),
            covariates: self.covariates.select(Axis(0), rows),
            ids: rows.iter().map(|&i| self.ids[i].clone()).collect(),
        }
    }

    /// Same outcomes, different covariates.
    pub fn with_covariates(&self, covariates: Array2<f64>) -> Result<Self> {
        Self::with_ids(self.times.clone(), self.status.clone(), covariates, self.ids.clone())
    }

    /// Outcome-only view (zero covariate columns).
    pub fn outcomes_only(&self) -> Self {
        Self {
            times: self.times.clone(),
            status: self.status.clone(),
            covariates: Array2::zeros((self.n(), 0)),
            ids: self.ids.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn rejects_nonpositive_times() {
        let x = Array2::zeros((2, 1));
        assert!(SurvivalDataset::new(vec![1.0, 0.0], vec![true, true], x.clone()).is_err());
        assert!(SurvivalDataset::new(vec![1.0, f64::INFINITY], vec![true, true], x).is_err());
    }

    #[test]
    fn rejects_bad_status_code() {
        let x = Array2::zeros((2, 1));
        let err = SurvivalDataset::from_status_codes(vec![1.0, 2.0], &[1, 2], x).unwrap_err();
        assert_eq!(err.kind(), "invalid_input");
    }

    #[test]
    fn rejects_row_mismatch() {
        let x = array![[1.0], [2.0], [3.0]];
        assert!(SurvivalDataset::new(vec![1.0, 2.0], vec![true, false], x).is_err());
    }

    #[test]
    fn subset_keeps_alignment() {
        let x = array![[1.0], [2.0], [3.0]];
        let d = SurvivalDataset::new(vec![3.0, 1.0, 2.0], vec![true, false, true], x).unwrap();
        let s = d.subset(&[2, 0]);
        assert_eq!(s.times(), &[2.0, 3.0]);
        assert_eq!(s.covariates()[[0, 0]], 3.0);
        assert_eq!(s.ids()[1], "obs1");
    }
}
