use serde::{Deserialize, Serialize};

use super::{check_lp, floored, Outcomes};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConcordanceKind {
    Harrell,
    GonenHeller,
    Uno,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceResult {
    pub value: f64,
    /// Every pairwise predictor difference was zero.
    pub all_tied: bool,
    /// A censoring weight was floored.
    pub weight_floored: bool,
}

/// Concordance of the linear predictor with observed times. A larger
/// predictor means a higher hazard. `train` supplies the censoring
/// distribution for the Uno weights.
pub fn concordance(kind: ConcordanceKind, lp: &[f64], test: Outcomes<'_>, train: Option<Outcomes<'_>>) -> Result<ConcordanceResult> {
    let n = test.len();
    check_lp(lp, n)?;
    if n < 2 {
        return Err(Error::Undefined("concordance needs at least two observations".into()));
    }
    let all_tied = lp.iter().all(|&v| v == lp[0]);
    match kind {
        ConcordanceKind::GonenHeller => {
            let mut sum = 0.0;
            for i in 0..n {
                for j in (i + 1)..n {
                    let d = lp[j] - lp[i];
                    if d < 0.0 {
                        sum += 1.0 / (1.0 + d.exp());
                    } else if d > 0.0 {
                        sum += 1.0 / (1.0 + (-d).exp());
                    }
                }
            }
            let value = 2.0 * sum / (n as f64 * (n as f64 - 1.0));
            Ok(ConcordanceResult { value, all_tied, weight_floored: false })
        }
        ConcordanceKind::Harrell | ConcordanceKind::Uno => {
            let mut weight_floored = false;
            let weights: Vec<f64> = match kind {
                ConcordanceKind::Uno => {
                    let g = train.unwrap_or(test).censoring_km()?;
                    (0..n)
                        .map(|i| {
                            let (gi, hit) = floored(g.eval_left(test.times[i]));
                            weight_floored |= hit && test.status[i];
                            1.0 / (gi * gi)
                        })
                        .collect()
                }
                _ => vec![1.0; n],
            };
            let (mut num, mut den) = (0.0, 0.0);
            for i in 0..n {
                if !test.status[i] {
                    continue;
                }
                for j in 0..n {
                    if test.times[i] < test.times[j] {
                        den += weights[i];
                        if lp[i] > lp[j] {
                            num += weights[i];
                        }
                    }
                }
            }
            if den == 0.0 {
                return Err(Error::Undefined("no comparable pairs".into()));
            }
            Ok(ConcordanceResult { value: num / den, all_tied, weight_floored })
        }
    }
}
