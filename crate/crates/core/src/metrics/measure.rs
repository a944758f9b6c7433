use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::auc::{iauc, AucEstimator, AucInput};
use super::concordance::{concordance, ConcordanceKind};
use super::error_curve::{error_grid, km_survival_matrix, prediction_error_curve, r2_prediction_error, CurveKind};
use super::r2::{r2_likelihood, R2Kind};
use super::{check_lp, Outcomes};
use crate::error::{Error, Result};
use crate::step::StepFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    /// Worst attainable score, used for degenerate fits.
    pub fn worst(self) -> f64 {
        match self {
            Direction::Maximize => f64::NEG_INFINITY,
            Direction::Minimize => f64::INFINITY,
        }
    }

    /// `a` strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Maximize => a > b,
            Direction::Minimize => a < b,
        }
    }
}

macro_rules! named_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $label:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $label)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn name(self) -> &'static str {
                match self {
                    $($name::$variant => $label),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                Self::ALL
                    .iter()
                    .copied()
                    .find(|v| v.name().eq_ignore_ascii_case(s))
                    .ok_or_else(|| Error::InvalidInput(format!("unknown {} '{}'", stringify!($name).to_lowercase(), s)))
            }
        }
    };
}

named_enum! {
    /// Cross-validation criteria.
    Criterion {
        Cvll => "CVLL",
        Vhcvll => "vHCVLL",
        IaucCd => "iAUCCD",
        IaucSh => "iAUCSH",
        IaucUno => "iAUCUno",
        IaucSurvRoc => "iAUCsurvROC",
        IbsW => "iBSw",
        IbsUnw => "iBSunw",
        IssW => "iSSw",
        IssUnw => "iSSunw",
    }
}

named_enum! {
    /// Test-set performance measures.
    Measure {
        R2Nag => "R2Nag",
        R2Xo => "R2XO",
        R2Oxs => "R2OXS",
        IR2BsW => "iR2BSw",
        IR2BsUnw => "iR2BSunw",
        IRssW => "iRSSw",
        IRssUnw => "iRSSunw",
        IaucCd => "iAUCCD",
        IaucSh => "iAUCSH",
        IaucUno => "iAUCUno",
        IaucSurvRoc => "iAUCsurvROC",
        HarrellC => "C",
        UnoC => "UnoC",
        Ghci => "GHCI",
        IbsW => "iBSw",
        IbsUnw => "iBSunw",
        IssW => "iSSw",
        IssUnw => "iSSunw",
    }
}

impl Criterion {
    pub fn direction(self) -> Direction {
        match self {
            Criterion::IbsW | Criterion::IbsUnw | Criterion::IssW | Criterion::IssUnw => Direction::Minimize,
            _ => Direction::Maximize,
        }
    }

    /// The held-out-fold measure behind a non-likelihood criterion.
    pub fn as_measure(self) -> Option<Measure> {
        Some(match self {
            Criterion::Cvll | Criterion::Vhcvll => return None,
            Criterion::IaucCd => Measure::IaucCd,
            Criterion::IaucSh => Measure::IaucSh,
            Criterion::IaucUno => Measure::IaucUno,
            Criterion::IaucSurvRoc => Measure::IaucSurvRoc,
            Criterion::IbsW => Measure::IbsW,
            Criterion::IbsUnw => Measure::IbsUnw,
            Criterion::IssW => Measure::IssW,
            Criterion::IssUnw => Measure::IssUnw,
        })
    }
}

impl Measure {
    pub fn direction(self) -> Direction {
        match self {
            Measure::IbsW | Measure::IbsUnw | Measure::IssW | Measure::IssUnw => Direction::Minimize,
            _ => Direction::Maximize,
        }
    }
}

/// Predictions of a fitted model on training and test rows, together with
/// the cumulative baseline hazard that turns a predictor into survival
/// curves.
#[derive(Debug, Clone, Copy)]
pub struct Prediction<'a> {
    pub train: Outcomes<'a>,
    pub train_lp: &'a [f64],
    pub test: Outcomes<'a>,
    pub test_lp: &'a [f64],
    pub baseline: &'a StepFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: f64,
    /// A convention or floor was applied (tied predictor, floored weights,
    /// skipped points).
    pub flagged: bool,
}

fn survival_on(lp: &[f64], baseline: &StepFunction, grid: &[f64]) -> Array2<f64> {
    Array2::from_shape_fn((lp.len(), grid.len()), |(i, k)| (-baseline.eval(grid[k]) * lp[i].exp()).exp())
}

pub fn evaluate(measure: Measure, pred: &Prediction<'_>) -> Result<Evaluation> {
    check_lp(pred.test_lp, pred.test.len())?;
    let test = pred.test;
    let lp = pred.test_lp;
    let plain = |value: f64| Ok(Evaluation { value, flagged: false });
    let curve = |kind: CurveKind, weighted: bool, null: bool| {
        let grid = error_grid(test);
        let surv = if null { km_survival_matrix(test, &grid)? } else { survival_on(lp, pred.baseline, &grid) };
        prediction_error_curve(&surv, &grid, test, kind, weighted)
    };
    let auc = |estimator: AucEstimator| -> Result<Evaluation> {
        let input = AucInput { train: pred.train, train_lp: pred.train_lp, test, test_lp: lp };
        let r = iauc(estimator, input, None)?;
        Ok(Evaluation { value: r.integrated, flagged: r.constant_lp || r.weight_floored })
    };
    let error = |kind: CurveKind, weighted: bool| -> Result<Evaluation> {
        let c = curve(kind, weighted, false)?;
        Ok(Evaluation { value: c.integrated, flagged: c.weight_floored })
    };
    let r2_error = |kind: CurveKind, weighted: bool| -> Result<Evaluation> {
        let model = curve(kind, weighted, false)?;
        let null = curve(kind, weighted, true)?;
        let (value, skipped) = r2_prediction_error(&model, &null)?;
        Ok(Evaluation { value, flagged: skipped || model.weight_floored })
    };
    let conc = |kind: ConcordanceKind| -> Result<Evaluation> {
        let r = concordance(kind, lp, test, Some(pred.train))?;
        Ok(Evaluation { value: r.value, flagged: r.all_tied || r.weight_floored })
    };
    match measure {
        Measure::R2Nag => plain(r2_likelihood(R2Kind::Nagelkerke, lp, test)?),
        Measure::R2Xo => plain(r2_likelihood(R2Kind::XuOQuigley, lp, test)?),
        Measure::R2Oxs => plain(r2_likelihood(R2Kind::OQuigleyXuStare, lp, test)?),
        Measure::IR2BsW => r2_error(CurveKind::Brier, true),
        Measure::IR2BsUnw => r2_error(CurveKind::Brier, false),
        Measure::IRssW => r2_error(CurveKind::Schmid, true),
        Measure::IRssUnw => r2_error(CurveKind::Schmid, false),
        Measure::IaucCd => auc(AucEstimator::ChamblessDiao),
        Measure::IaucSh => auc(AucEstimator::SongZhou),
        Measure::IaucUno => auc(AucEstimator::Uno),
        Measure::IaucSurvRoc => auc(AucEstimator::SurvivalRoc),
        Measure::HarrellC => conc(ConcordanceKind::Harrell),
        Measure::UnoC => conc(ConcordanceKind::Uno),
        Measure::Ghci => conc(ConcordanceKind::GonenHeller),
        Measure::IbsW => error(CurveKind::Brier, true),
        Measure::IbsUnw => error(CurveKind::Brier, false),
        Measure::IssW => error(CurveKind::Schmid, true),
        Measure::IssUnw => error(CurveKind::Schmid, false),
    }
}
