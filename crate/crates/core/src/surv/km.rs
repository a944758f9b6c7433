use serde::{Deserialize, Serialize};

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::step::StepFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// Survival of the event time, Ŝ.
    Event,
    /// Survival of the censoring time, Ĝ, built from `(t_i, 1 - δ_i)`.
    Censoring,
}

/// Product-limit estimate. `is_jump[i]` marks observations counted as
/// "events" for this orientation.
pub fn kaplan_meier(times: &[f64], is_jump: &[bool]) -> Result<StepFunction> {
    if times.is_empty() {
        return Err(Error::InvalidInput("Kaplan-Meier on empty data".into()));
    }
    if times.len() != is_jump.len() {
        return Err(Error::DimensionMismatch("times and indicators differ in length".into()));
    }
    let mut order: Vec<usize> = (0..times.len()).collect();
    order.sort_by(|&a, &b| times[a].total_cmp(&times[b]));

    let n = times.len();
    let mut knots = Vec::new();
    let mut values = Vec::new();
    let mut surv = 1.0;
    let mut k = 0;
    while k < n {
        let t = times[order[k]];
        let at_risk = n - k;
        let mut d = 0usize;
        let mut j = k;
        while j < n && times[order[j]] == t {
            if is_jump[order[j]] {
                d += 1;
            }
            j += 1;
        }
        if d > 0 {
            surv *= 1.0 - d as f64 / at_risk as f64;
            knots.push(t);
            values.push(surv);
        }
        k = j;
    }
    StepFunction::new(knots, values, 1.0)
}

pub fn km_estimator(data: &SurvivalDataset, orientation: Orientation) -> Result<StepFunction> {
    let jumps: Vec<bool> = match orientation {
        Orientation::Event => data.status().to_vec(),
        Orientation::Censoring => data.status().iter().map(|s| !s).collect(),
    };
    kaplan_meier(data.times(), &jumps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn ds(times: &[f64], status: &[bool]) -> SurvivalDataset {
        SurvivalDataset::new(times.to_vec(), status.to_vec(), Array2::zeros((times.len(), 0))).unwrap()
    }

    #[test]
    fn uncensored_is_empirical() {
        let s = km_estimator(&ds(&[1.0, 2.0, 3.0], &[true; 3]), Orientation::Event).unwrap();
        assert_eq!(s.eval(0.5), 1.0);
        assert!((s.eval(1.0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((s.eval(2.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.eval(3.0), 0.0);
    }

    #[test]
    fn all_censored_is_flat() {
        let s = km_estimator(&ds(&[1.0, 2.0, 3.0], &[false; 3]), Orientation::Event).unwrap();
        for t in [0.0, 1.0, 2.5, 10.0] {
            assert_eq!(s.eval(t), 1.0);
        }
    }

    #[test]
    fn hand_product_limit() {
        let d = ds(&[1.0, 2.0, 3.0, 4.0], &[true, false, true, false]);
        let s = km_estimator(&d, Orientation::Event).unwrap();
        assert!((s.eval(1.0) - 0.75).abs() < 1e-15);
        assert!((s.eval(3.0) - 0.375).abs() < 1e-15);
        // censoring orientation: jumps at 2 (3 at risk) and 4 (1 at risk)
        let g = km_estimator(&d, Orientation::Censoring).unwrap();
        assert!((g.eval(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(g.eval(4.0), 0.0);
        assert!((g.eval_left(4.0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_is_error() {
        assert!(kaplan_meier(&[], &[]).is_err());
    }
}
