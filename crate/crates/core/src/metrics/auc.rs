use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{check_lp, floored, Outcomes};
use crate::error::{Error, Result};
use crate::surv::{fit_cox_with, CoxOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AucEstimator {
    /// Kaplan-Meier recursive weights on the test data; integrated against
    /// the estimated event-time density.
    ChamblessDiao,
    /// Censored subjects are split between cases and controls by a Cox model
    /// of the training outcomes on the training predictor.
    SongZhou,
    /// Inverse probability of censoring weights from the training data.
    Uno,
    /// Nearest-neighbor Kaplan-Meier smoothing over the predictor.
    SurvivalRoc,
}

impl AucEstimator {
    pub const ALL: [AucEstimator; 4] =
        [AucEstimator::ChamblessDiao, AucEstimator::SongZhou, AucEstimator::Uno, AucEstimator::SurvivalRoc];
}

#[derive(Debug, Clone, Copy)]
pub struct AucInput<'a> {
    pub train: Outcomes<'a>,
    pub train_lp: &'a [f64],
    pub test: Outcomes<'a>,
    pub test_lp: &'a [f64],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IaucResult {
    pub estimator: AucEstimator,
    pub times: Vec<f64>,
    pub auc: Vec<f64>,
    pub integrated: f64,
    /// The test predictor is constant, so every AUC is 1/2.
    pub constant_lp: bool,
    pub weight_floored: bool,
}

/// Test event times with at least one earlier-or-equal event and one later
/// observation.
pub fn auc_grid(test: Outcomes<'_>) -> Vec<f64> {
    let max_t = test.max_time();
    let mut grid: Vec<f64> = (0..test.len()).filter(|&i| test.status[i] && test.times[i] < max_t).map(|i| test.times[i]).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

/// `Σ_i Σ_j a_i b_j [1(lp_i > lp_j) + ½ 1(lp_i = lp_j)] / Σ_i Σ_j a_i b_j`.
fn weighted_pair_auc(lp: &[f64], case: &[f64], control: &[f64], include_self: bool) -> Option<f64> {
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..lp.len() {
        if case[i] == 0.0 {
            continue;
        }
        for j in 0..lp.len() {
            if (i == j && !include_self) || control[j] == 0.0 {
                continue;
            }
            let w = case[i] * control[j];
            den += w;
            if lp[i] > lp[j] {
                num += w;
            } else if lp[i] == lp[j] {
                num += 0.5 * w;
            }
        }
    }
    (den > 0.0).then(|| num / den)
}

/// Default neighborhood span for the nearest-neighbor estimator.
pub fn default_span(n: usize) -> f64 {
    0.25 * (n as f64).powf(-0.2)
}

/// Kaplan-Meier survival at each grid time within each subject's predictor
/// neighborhood: the `h` nearest ranks on either side.
fn nne_survival(lp: &[f64], test: Outcomes<'_>, grid: &[f64], span: f64) -> Array2<f64> {
    let n = lp.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lp[a].total_cmp(&lp[b]).then(a.cmp(&b)));
    let h = (n as f64 * span / 2.0 + 0.5).trunc() as usize;
    let mut out = Array2::zeros((n, grid.len()));
    for (pos, &i) in order.iter().enumerate() {
        let lo = pos.saturating_sub(h);
        let hi = (pos + h).min(n - 1);
        // subjects tied with i in the predictor share its neighborhood
        let mut members: Vec<usize> = order[lo..=hi].to_vec();
        members.extend(order.iter().copied().filter(|&j| lp[j] == lp[i] && !order[lo..=hi].contains(&j)));
        let mut events: Vec<(f64, bool)> = members.iter().map(|&j| (test.times[j], test.status[j])).collect();
        events.sort_by(|a, b| a.0.total_cmp(&b.0));
        for (k, &t) in grid.iter().enumerate() {
            let mut surv = 1.0;
            let mut at_risk = events.len();
            let mut idx = 0;
            while idx < events.len() && events[idx].0 <= t {
                let time = events[idx].0;
                let mut d = 0;
                let mut c = 0;
                while idx < events.len() && events[idx].0 == time {
                    if events[idx].1 {
                        d += 1;
                    }
                    c += 1;
                    idx += 1;
                }
                if d > 0 {
                    surv *= 1.0 - d as f64 / at_risk as f64;
                }
                at_risk -= c;
            }
            out[[i, k]] = surv;
        }
    }
    out
}

/// Time-dependent cumulative/dynamic AUC on `grid` (default: `auc_grid`),
/// integrated over the grid.
pub fn iauc(estimator: AucEstimator, input: AucInput<'_>, grid: Option<&[f64]>) -> Result<IaucResult> {
    let test = input.test;
    let n = test.len();
    check_lp(input.test_lp, n)?;
    let lp = input.test_lp;
    let owned;
    let grid = match grid {
        Some(g) => g,
        None => {
            owned = auc_grid(test);
            &owned[..]
        }
    };
    if grid.is_empty() {
        return Err(Error::Undefined("no time point has both cases and controls".into()));
    }
    let constant_lp = lp.iter().all(|&v| v == lp[0]);
    let mut weight_floored = false;

    let per_time: Vec<Option<f64>> = match estimator {
        AucEstimator::Uno => {
            let g = input.train.censoring_km()?;
            let inv: Vec<f64> = (0..n)
                .map(|i| {
                    let (gi, hit) = floored(g.eval_left(test.times[i]));
                    weight_floored |= hit && test.status[i];
                    1.0 / gi
                })
                .collect();
            grid.iter()
                .map(|&t| {
                    let case: Vec<f64> = (0..n).map(|i| if test.status[i] && test.times[i] <= t { inv[i] } else { 0.0 }).collect();
                    let control: Vec<f64> = (0..n).map(|j| if test.times[j] > t { 1.0 } else { 0.0 }).collect();
                    weighted_pair_auc(lp, &case, &control, false)
                })
                .collect()
        }
        AucEstimator::ChamblessDiao => {
            let km = test.survival_km()?;
            let mass: Vec<f64> = (0..n)
                .map(|i| {
                    let at_risk = test.times.iter().filter(|&&u| u >= test.times[i]).count();
                    km.eval_left(test.times[i]) / at_risk as f64
                })
                .collect();
            grid.iter()
                .map(|&t| {
                    let case: Vec<f64> = (0..n).map(|i| if test.status[i] && test.times[i] <= t { mass[i] } else { 0.0 }).collect();
                    let control: Vec<f64> = (0..n).map(|j| if test.times[j] > t { 1.0 } else { 0.0 }).collect();
                    weighted_pair_auc(lp, &case, &control, false)
                })
                .collect()
        }
        AucEstimator::SongZhou => {
            let need_model = (0..n).any(|i| !test.status[i]);
            let model = if need_model { Some(censored_case_model(input)?) } else { None };
            grid.iter()
                .map(|&t| {
                    let mut case = vec![0.0; n];
                    let mut control = vec![0.0; n];
                    for i in 0..n {
                        if test.times[i] > t {
                            control[i] = 1.0;
                        } else if test.status[i] {
                            case[i] = 1.0;
                        } else if let Some((gamma, base)) = &model {
                            let risk = (gamma * lp[i]).exp();
                            let s_t = (-base.eval(t) * risk).exp();
                            let s_c = (-base.eval(test.times[i]) * risk).exp();
                            let pi = if s_c > 0.0 { (1.0 - s_t / s_c).clamp(0.0, 1.0) } else { 1.0 };
                            case[i] = pi;
                            control[i] = 1.0 - pi;
                        }
                    }
                    weighted_pair_auc(lp, &case, &control, false)
                })
                .collect()
        }
        AucEstimator::SurvivalRoc => {
            let surv = nne_survival(lp, test, grid, default_span(n));
            (0..grid.len())
                .map(|k| {
                    let control: Vec<f64> = (0..n).map(|i| surv[[i, k]]).collect();
                    let case: Vec<f64> = control.iter().map(|s| 1.0 - s).collect();
                    weighted_pair_auc(lp, &case, &control, true)
                })
                .collect()
        }
    };

    let mut times = Vec::with_capacity(grid.len());
    let mut auc = Vec::with_capacity(grid.len());
    for (&t, a) in grid.iter().zip(per_time) {
        if let Some(a) = a {
            times.push(t);
            auc.push(a);
        }
    }
    if auc.is_empty() {
        return Err(Error::Undefined("no time point has both cases and controls".into()));
    }
    let integrated = match estimator {
        AucEstimator::ChamblessDiao => {
            let km = test.survival_km()?;
            let dens: Vec<f64> = times.iter().map(|&t| km.eval_left(t) - km.eval(t)).collect();
            let total: f64 = dens.iter().sum();
            if total > 0.0 {
                auc.iter().zip(dens.iter()).map(|(a, w)| a * w).sum::<f64>() / total
            } else {
                auc.iter().sum::<f64>() / auc.len() as f64
            }
        }
        _ => auc.iter().sum::<f64>() / auc.len() as f64,
    };
    Ok(IaucResult { estimator, times, auc, integrated, constant_lp, weight_floored })
}

/// Cox model of the training outcomes on the training predictor as its only
/// covariate: slope and cumulative baseline hazard.
fn censored_case_model(input: AucInput<'_>) -> Result<(f64, crate::step::StepFunction)> {
    check_lp(input.train_lp, input.train.len())?;
    let x = Array2::from_shape_vec((input.train_lp.len(), 1), input.train_lp.to_vec()).expect("column");
    let fit = match fit_cox_with(input.train.times, input.train.status, &x, &ndarray::Array1::zeros(1), &CoxOptions::default()) {
        Ok(f) => f,
        Err(Error::MonotoneLikelihood { last }) => *last,
        Err(e) => return Err(e),
    };
    Ok((fit.beta[0], fit.baseline_cumhaz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const ALL: [AucEstimator; 4] = AucEstimator::ALL;

    /// Exhaustive pair counting: cases T_i <= t, controls T_j > t.
    fn empirical_auc(times: &[f64], lp: &[f64], t: f64) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..times.len() {
            for j in 0..times.len() {
                if times[i] <= t && times[j] > t {
                    den += 1.0;
                    num += if lp[i] > lp[j] { 1.0 } else if lp[i] == lp[j] { 0.5 } else { 0.0 };
                }
            }
        }
        num / den
    }

    fn uncensored(seed: u64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lp: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let times = lp.iter().map(|l| -(rng.random::<f64>()).ln() / (1.5 * l).exp()).collect();
        (times, lp)
    }

    #[test]
    fn constant_predictor_is_half() {
        let t = [1.0, 2.0, 3.0, 4.0, 5.0];
        let s = [true, false, true, true, false];
        let o = Outcomes::new(&t, &s).unwrap();
        let lp = [0.3; 5];
        let input = AucInput { train: o, train_lp: &lp, test: o, test_lp: &lp };
        for e in ALL {
            let r = iauc(e, input, None).unwrap();
            assert!(r.constant_lp);
            assert!(r.auc.iter().all(|&a| a == 0.5), "{e:?}");
            assert_eq!(r.integrated, 0.5);
        }
    }

    #[test]
    fn perfect_ranking_is_one() {
        let t = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let s = [true; 6];
        let o = Outcomes::new(&t, &s).unwrap();
        let lp: Vec<f64> = t.iter().map(|v| -v).collect();
        let input = AucInput { train: o, train_lp: &lp, test: o, test_lp: &lp };
        for e in [AucEstimator::ChamblessDiao, AucEstimator::SongZhou, AucEstimator::Uno] {
            let r = iauc(e, input, None).unwrap();
            assert!(r.auc.iter().all(|&a| a == 1.0), "{e:?}");
            assert_eq!(r.integrated, 1.0);
        }
    }

    #[test]
    fn uncensored_agrees_with_pair_counting() {
        for seed in 0..5 {
            let (t, lp) = uncensored(seed, 30);
            let s = vec![true; 30];
            let o = Outcomes::new(&t, &s).unwrap();
            let input = AucInput { train: o, train_lp: &lp, test: o, test_lp: &lp };
            for e in ALL {
                let r = iauc(e, input, None).unwrap();
                let exact: Vec<f64> = r.times.iter().map(|&time| empirical_auc(&t, &lp, time)).collect();
                if e == AucEstimator::SurvivalRoc {
                    // smoothing over neighbors blurs the indicators
                    let mean = exact.iter().sum::<f64>() / exact.len() as f64;
                    assert!((r.integrated - mean).abs() < 0.05, "seed {seed}");
                    continue;
                }
                for (a, b) in r.auc.iter().zip(exact.iter()) {
                    assert!((a - b).abs() <= 1e-12, "{e:?} seed {seed}");
                }
            }
        }
    }

    #[test]
    fn permutation_and_monotone_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (t, lp) = uncensored(11, 25);
        let s: Vec<bool> = (0..25).map(|_| rng.random::<f64>() < 0.7).collect();
        let o = Outcomes::new(&t, &s).unwrap();
        let perm: Vec<usize> = (0..25).rev().collect();
        let tp: Vec<f64> = perm.iter().map(|&i| t[i]).collect();
        let sp: Vec<bool> = perm.iter().map(|&i| s[i]).collect();
        let lpp: Vec<f64> = perm.iter().map(|&i| lp[i]).collect();
        let op = Outcomes::new(&tp, &sp).unwrap();
        let lp_exp: Vec<f64> = lp.iter().map(|v| (3.0 * v).exp()).collect();
        for e in [AucEstimator::ChamblessDiao, AucEstimator::Uno, AucEstimator::SurvivalRoc, AucEstimator::SongZhou] {
            let a = iauc(e, AucInput { train: o, train_lp: &lp, test: o, test_lp: &lp }, None).unwrap();
            let b = iauc(e, AucInput { train: op, train_lp: &lpp, test: op, test_lp: &lpp }, None).unwrap();
            assert!((a.integrated - b.integrated).abs() < 1e-12, "{e:?}");
            if e != AucEstimator::SongZhou {
                let c = iauc(e, AucInput { train: o, train_lp: &lp_exp, test: o, test_lp: &lp_exp }, None).unwrap();
                assert!((a.integrated - c.integrated).abs() < 1e-12, "{e:?}");
            }
            assert!(a.auc.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn empty_grid_is_undefined() {
        let t = [1.0, 2.0];
        let s = [false, false];
        let o = Outcomes::new(&t, &s).unwrap();
        let lp = [0.0, 1.0];
        assert!(iauc(AucEstimator::Uno, AucInput { train: o, train_lp: &lp, test: o, test_lp: &lp }, None).is_err());
    }
}
