use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{floored, Outcomes};
use crate::error::{Error, Result};
use crate::step::StepFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveKind {
    /// Squared deviation.
    Brier,
    /// Absolute deviation.
    Schmid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionErrorCurve {
    pub kind: CurveKind,
    pub weighted: bool,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `(1/max t) ∫ curve`, trapezoid rule.
    pub integrated: f64,
    /// A censoring weight was floored.
    pub weight_floored: bool,
}

impl PredictionErrorCurve {
    pub fn as_step(&self) -> Result<StepFunction> {
        StepFunction::new(self.times.clone(), self.values.clone(), self.values.first().copied().unwrap_or(0.0))
    }
}

/// Zero followed by the sorted unique test times.
pub fn error_grid(test: Outcomes<'_>) -> Vec<f64> {
    let mut grid: Vec<f64> = test.times.to_vec();
    grid.push(0.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// Kaplan-Meier curve of the test outcomes repeated for every row: the
/// prediction that ignores covariates.
pub fn km_survival_matrix(test: Outcomes<'_>, grid: &[f64]) -> Result<Array2<f64>> {
    let km = test.survival_km()?;
    Ok(Array2::from_shape_fn((test.len(), grid.len()), |(_, k)| km.eval(grid[k])))
}

/// `(1/t_last) ∫ values` over `times` by the trapezoid rule.
pub fn integrate_curve(times: &[f64], values: &[f64]) -> f64 {
    let Some(&last) = times.last() else { return f64::NAN };
    if times.len() == 1 {
        return values[0];
    }
    let area: f64 = times
        .windows(2)
        .zip(values.windows(2))
        .map(|(t, v)| (t[1] - t[0]) * 0.5 * (v[0] + v[1]))
        .sum();
    area / last
}

/// Brier or Schmid score over `grid`, with `surv[[i, k]] = Ŝ(grid[k] | x_i)`.
/// Weighted versions divide by the censoring survival of the test set,
/// `Ĝ(t_i)` (and `Ĝ(t_i-)` for Schmid events).
pub fn prediction_error_curve(
    surv: &Array2<f64>,
    grid: &[f64],
    test: Outcomes<'_>,
    kind: CurveKind,
    weighted: bool,
) -> Result<PredictionErrorCurve> {
    let n = test.len();
    if surv.dim() != (n, grid.len()) {
        return Err(Error::DimensionMismatch(format!(
            "survival matrix is {:?}, expected ({}, {})",
            surv.dim(),
            n,
            grid.len()
        )));
    }
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidInput("grid must be nonempty and strictly increasing".into()));
    }
    let mut weight_floored = false;
    let (w_event, w_alive): (Vec<f64>, Vec<f64>) = if weighted {
        let g = test.censoring_km()?;
        (0..n)
            .map(|i| {
                let t = test.times[i];
                let at_event = match kind {
                    CurveKind::Brier => g.eval(t),
                    CurveKind::Schmid => g.eval_left(t),
                };
                let (ge, he) = floored(at_event);
                let (ga, ha) = floored(g.eval(t));
                weight_floored |= he || ha;
                (1.0 / ge, 1.0 / ga)
            })
            .unzip()
    } else {
        (vec![1.0; n], vec![1.0; n])
    };

    let values: Vec<f64> = grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let total: f64 = (0..n)
                .map(|i| {
                    let s = surv[[i, k]];
                    let loss = |v: f64| match kind {
                        CurveKind::Brier => v * v,
                        CurveKind::Schmid => v.abs(),
                    };
                    if test.times[i] <= t && test.status[i] {
                        loss(s) * w_event[i]
                    } else if test.times[i] > t {
                        loss(1.0 - s) * w_alive[i]
                    } else {
                        0.0
                    }
                })
                .sum();
            total / n as f64
        })
        .collect();
    let integrated = integrate_curve(grid, &values);
    Ok(PredictionErrorCurve { kind, weighted, times: grid.to_vec(), values, integrated, weight_floored })
}

/// Integrated `1 - curve/null`. Points where the null curve vanishes are
/// skipped and the integral is normalized by the length actually covered;
/// the flag reports skipping inside the range.
pub fn r2_prediction_error(model: &PredictionErrorCurve, null: &PredictionErrorCurve) -> Result<(f64, bool)> {
    if model.times != null.times || model.kind != null.kind || model.weighted != null.weighted {
        return Err(Error::InvalidInput("curves differ in grid, kind or weighting".into()));
    }
    let ratio: Vec<Option<f64>> = model
        .values
        .iter()
        .zip(null.values.iter())
        .map(|(&m, &z)| if z > 0.0 { Some(1.0 - m / z) } else { None })
        .collect();
    let (mut area, mut length) = (0.0, 0.0);
    for k in 1..ratio.len() {
        if let (Some(a), Some(b)) = (ratio[k - 1], ratio[k]) {
            let dt = model.times[k] - model.times[k - 1];
            area += dt * 0.5 * (a + b);
            length += dt;
        }
    }
    if !(length > 0.0) {
        return Err(Error::Undefined("null prediction error is zero everywhere".into()));
    }
    // the origin is always skipped (no error at time zero)
    let skipped = ratio.iter().skip(1).any(|r| r.is_none());
    Ok((area / length, skipped))
}

#[cfg(test)]
mod tests {
    use super::*;

    const T: [f64; 6] = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];

    fn curve(surv: &Array2<f64>, s: &[bool], kind: CurveKind, weighted: bool) -> PredictionErrorCurve {
        let test = Outcomes::new(&T, s).unwrap();
        prediction_error_curve(surv, &error_grid(test), test, kind, weighted).unwrap()
    }

    #[test]
    fn brier_is_zero_at_origin() {
        let s = [true, false, true, true, false, true];
        let test = Outcomes::new(&T, &s).unwrap();
        let grid = error_grid(test);
        let surv = Array2::from_shape_fn((6, grid.len()), |(i, k)| (-(grid[k] * (i as f64 + 1.0) / 6.0)).exp());
        for kind in [CurveKind::Brier, CurveKind::Schmid] {
            let c = prediction_error_curve(&surv, &grid, test, kind, true).unwrap();
            assert_eq!(c.values[0], 0.0);
        }
    }

    #[test]
    fn half_survival_without_censoring() {
        let s = [true; 6];
        let surv = Array2::from_elem((6, 7), 0.5);
        let b = curve(&surv, &s, CurveKind::Brier, true);
        assert!(b.values.iter().all(|&v| (v - 0.25).abs() < 1e-15));
        assert!((b.integrated - 0.25).abs() < 1e-10);
        let ss = curve(&surv, &s, CurveKind::Schmid, true);
        assert!(ss.values.iter().all(|&v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn oracle_predictor_scores_zero() {
        let s = [true; 6];
        let test = Outcomes::new(&T, &s).unwrap();
        let grid = error_grid(test);
        let surv = Array2::from_shape_fn((6, grid.len()), |(i, k)| if T[i] > grid[k] { 1.0 } else { 0.0 });
        for kind in [CurveKind::Brier, CurveKind::Schmid] {
            let c = prediction_error_curve(&surv, &grid, test, kind, true).unwrap();
            assert!(c.values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn weighting_is_inert_without_censoring() {
        let s = [true; 6];
        let test = Outcomes::new(&T, &s).unwrap();
        let grid = error_grid(test);
        let surv = Array2::from_shape_fn((6, grid.len()), |(i, k)| (-(grid[k] / (i as f64 + 2.0))).exp());
        for kind in [CurveKind::Brier, CurveKind::Schmid] {
            let a = prediction_error_curve(&surv, &grid, test, kind, true).unwrap();
            let b = prediction_error_curve(&surv, &grid, test, kind, false).unwrap();
            assert_eq!(a.values, b.values);
        }
    }

    #[test]
    fn weighted_by_hand() {
        // censoring KM: drop at t=2 (5 at risk) to 0.8, at t=5 (2 at risk) to 0.4
        let s = [true, false, true, true, false, true];
        let test = Outcomes::new(&T, &s).unwrap();
        let grid = vec![0.0, 3.0];
        let surv = Array2::from_shape_fn((6, 2), |(_, k)| if k == 0 { 1.0 } else { 0.6 });
        let c = prediction_error_curve(&surv, &grid, test, CurveKind::Brier, true).unwrap();
        // events by 3: obs 0 (G=1), obs 2 (G=0.8); alive after 3: obs 3 (0.8), 4 (0.4), 5 (0.4)
        let expected = (0.36 / 1.0 + 0.36 / 0.8 + 0.16 / 0.8 + 0.16 / 0.4 + 0.16 / 0.4) / 6.0;
        assert!((c.values[1] - expected).abs() < 1e-15);
        let ss = prediction_error_curve(&surv, &grid, test, CurveKind::Schmid, true).unwrap();
        // Schmid events use G(t-): obs 2 at t=3 sees 0.8
        let expected = (0.6 / 1.0 + 0.6 / 0.8 + 0.4 / 0.8 + 0.4 / 0.4 + 0.4 / 0.4) / 6.0;
        assert!((ss.values[1] - expected).abs() < 1e-15);
    }

    #[test]
    fn integrated_between_extremes() {
        let s = [true, false, true, true, false, true];
        let test = Outcomes::new(&T, &s).unwrap();
        let grid = error_grid(test);
        let surv = Array2::from_shape_fn((6, grid.len()), |(i, k)| (-(grid[k] * (i as f64 + 1.0) / 10.0)).exp());
        let c = prediction_error_curve(&surv, &grid, test, CurveKind::Brier, false).unwrap();
        let lo = c.values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = c.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert!(c.integrated >= lo && c.integrated <= hi);
        assert!(c.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn r2_from_curves() {
        let s = [true, false, true, true, false, true];
        let test = Outcomes::new(&T, &s).unwrap();
        let grid = error_grid(test);
        let null = curve(&km_survival_matrix(test, &grid).unwrap(), &s, CurveKind::Brier, true);
        assert_eq!(r2_prediction_error(&null, &null).unwrap().0, 0.0);
        let mut half = null.clone();
        half.values.iter_mut().for_each(|v| *v *= 0.5);
        assert!((r2_prediction_error(&half, &null).unwrap().0 - 0.5).abs() < 1e-15);
        let mut perfect = null.clone();
        perfect.values.iter_mut().for_each(|v| *v = 0.0);
        assert!((r2_prediction_error(&perfect, &null).unwrap().0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn shape_errors() {
        let s = [true; 6];
        let test = Outcomes::new(&T, &s).unwrap();
        assert!(prediction_error_curve(&Array2::zeros((5, 7)), &error_grid(test), test, CurveKind::Brier, true).is_err());
        assert!(prediction_error_curve(&Array2::zeros((6, 2)), &[1.0, 0.5], test, CurveKind::Brier, true).is_err());
    }
}
