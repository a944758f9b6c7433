use serde::{Deserialize, Serialize};

use super::{check_lp, Outcomes};
use crate::error::{Error, Result};
use crate::surv::{partial_loglik_lp, schoenfeld_lp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum R2Kind {
    /// `1 - exp(-(2/n)(l(β̂) - l(0)))`
    Nagelkerke,
    /// `1 - J(β̂)/J(0)` with `J` the weighted sum of squared Schoenfeld residuals.
    XuOQuigley,
    /// `1 - exp(-(2/e)(l(β̂) - l(0)))`, `e` the number of events.
    OQuigleyXuStare,
}

/// Likelihood-type R² of a linear predictor on the given outcomes. The
/// predictor is treated as a single covariate with coefficient 1.
pub fn r2_likelihood(kind: R2Kind, lp: &[f64], data: Outcomes<'_>) -> Result<f64> {
    check_lp(lp, data.len())?;
    let events = data.n_events();
    if events == 0 {
        return Err(Error::Undefined("no events".into()));
    }
    let gain = || {
        let zero = vec![0.0; lp.len()];
        partial_loglik_lp(data.times, data.status, lp) - partial_loglik_lp(data.times, data.status, &zero)
    };
    match kind {
        R2Kind::Nagelkerke => Ok(1.0 - (-2.0 / data.len() as f64 * gain()).exp()),
        R2Kind::OQuigleyXuStare => Ok(1.0 - (-2.0 / events as f64 * gain()).exp()),
        R2Kind::XuOQuigley => {
            let weights = event_weights(data)?;
            let j = |gamma: f64| -> f64 {
                let r = schoenfeld_lp(data.times, data.status, lp, gamma);
                r.iter().zip(weights.iter()).map(|(v, w)| w * v * v).sum()
            };
            let j0 = j(0.0);
            if !(j0 > 0.0) {
                // constant predictor explains nothing
                return Ok(0.0);
            }
            Ok(1.0 - j(1.0) / j0)
        }
    }
}

/// Kaplan-Meier jump at each event time, shared among tied events; ordered
/// like the rows of the Schoenfeld residual matrix (by row index).
fn event_weights(data: Outcomes<'_>) -> Result<Vec<f64>> {
    let km = data.survival_km()?;
    let mut out = Vec::new();
    for i in 0..data.len() {
        if !data.status[i] {
            continue;
        }
        let t = data.times[i];
        let ties = (0..data.len()).filter(|&k| data.status[k] && data.times[k] == t).count();
        out.push((km.eval_left(t) - km.eval(t)) / ties as f64);
    }
    Ok(out)
}
