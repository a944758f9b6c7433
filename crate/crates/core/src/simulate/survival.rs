use ndarray::Array2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::Link;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalDraw {
    pub times: Vec<f64>,
    pub status: Vec<bool>,
    pub lp: Vec<f64>,
    /// Censoring hazard θ.
    pub theta: f64,
    /// Expected censoring probability at θ given the predictor.
    pub censoring_rate: f64,
}

/// `c Σ x_j` (linear) or `c Σ (x_j² - 1)` (quadratic) over `relevant`,
/// centered over rows.
pub fn link_predictor(x: &Array2<f64>, relevant: &[usize], link: Link, strength: f64) -> Result<Vec<f64>> {
    if let Some(&j) = relevant.iter().find(|&&j| j >= x.ncols()) {
        return Err(Error::InvalidInput(format!("relevant column {j} outside {} columns", x.ncols())));
    }
    let raw: Vec<f64> = x
        .rows()
        .into_iter()
        .map(|row| match link {
            Link::None => 0.0,
            Link::Linear => relevant.iter().map(|&j| row[j]).sum(),
            Link::Quadratic => relevant.iter().map(|&j| row[j] * row[j] - 1.0).sum(),
        })
        .collect();
    let mean = raw.iter().sum::<f64>() / raw.len().max(1) as f64;
    Ok(raw.iter().map(|v| strength * (v - mean)).collect())
}

/// Censoring hazard θ with `mean_i θ / (θ + exp(lp_i)) = target`, by bisection
/// on `log θ`.
pub fn calibrate_censoring(lp: &[f64], target: f64) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) || lp.is_empty() {
        return Err(Error::Calibration(format!("target {target} with {} subjects", lp.len())));
    }
    let hazards: Vec<f64> = lp.iter().map(|v| v.exp()).collect();
    let rate = |log_theta: f64| {
        let theta = log_theta.exp();
        hazards.iter().map(|h| theta / (theta + h)).sum::<f64>() / hazards.len() as f64
    };
    let (mut lo, mut hi) = (-50.0, 50.0);
    let (r_lo, r_hi) = (rate(lo), rate(hi));
    if !(r_lo < target && r_hi > target) {
        return Err(Error::Calibration(format!(
            "censoring rate spans [{r_lo}, {r_hi}] over θ in [e^-50, e^50], target {target}; lp range [{}, {}]",
            lp.iter().copied().fold(f64::INFINITY, f64::min),
            lp.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        )));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if rate(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((0.5 * (lo + hi)).exp())
}

fn exponential(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    // 1 - u lies in (0, 1]
    -(1.0 - rng.random::<f64>()).ln() / rate
}

/// Exponential event times with hazard `exp(lp)` and exponential censoring
/// with hazard calibrated to `censor_target`.
pub fn gen_survival(
    x: &Array2<f64>,
    relevant: &[usize],
    link: Link,
    strength: f64,
    censor_target: f64,
    rng: &mut ChaCha8Rng,
) -> Result<SurvivalDraw> {
    let lp = link_predictor(x, relevant, link, strength)?;
    let theta = calibrate_censoring(&lp, censor_target)?;
    let mut times = Vec::with_capacity(lp.len());
    let mut status = Vec::with_capacity(lp.len());
    for &l in &lp {
        let event = exponential(rng, l.exp());
        let censor = exponential(rng, theta);
        let t = event.min(censor);
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Calibration(format!("drew time {t} (lp {l}, θ {theta})")));
        }
        times.push(t);
        status.push(event <= censor);
    }
    let censoring_rate = lp.iter().map(|l| theta / (theta + l.exp())).sum::<f64>() / lp.len() as f64;
    Ok(SurvivalDraw { times, status, lp, theta, censoring_rate })
}
