//! Balanced folds, criterion-driven cross-validation and hyperparameter
//! selection over the number of components and the thresholding fraction.

use std::fmt;

use ndarray::{Array1, Array2};
use rand::seq::{index, SliceRandom};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::metrics::{evaluate, fold_loglik_term, Criterion, CvScheme, Direction, Outcomes, Prediction};
use crate::models::{fit_path, FittedSurvivalModel, Method, ModelSpec};
use crate::step::StepFunction;
use crate::surv::CoxProblem;

pub const DEFAULT_FOLDS: usize = 7;
pub const DEFAULT_MAX_COMPONENTS: usize = 6;

/// `{0, 0.1, ..., 0.9}`.
pub fn default_eta_grid() -> Vec<f64> {
    (0..10).map(|k| f64::from(k) / 10.0).collect()
}

/// iAUCSH for the Cox-weight methods, iAUCsurvROC otherwise.
pub fn default_criterion(method: Method) -> Criterion {
    match method {
        Method::PlsCox | Method::AutoPlsCox => Criterion::IaucSh,
        _ => Criterion::IaucSurvRoc,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Fold of each observation.
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn held_out(&self, fold: usize) -> Vec<bool> {
        self.assignment.iter().map(|&f| f == fold).collect()
    }

    pub fn training_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] != fold).collect()
    }

    pub fn test_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len()).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        self.assignment.iter().for_each(|&f| s[f] += 1);
        s
    }
}

/// Observations ordered by (status, time) and cut into bins of `k`
/// consecutive rows; each full bin sends one row to every fold, the last
/// partial bin sends its rows to distinct random folds.
pub fn make_balanced_folds(data: &SurvivalDataset, k: usize, rng: &mut ChaCha8Rng) -> Result<FoldPlan> {
    let n = data.n();
    if k < 2 || k > n {
        return Err(Error::InvalidInput(format!("{k} folds for {n} observations")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        data.status()[a]
            .cmp(&data.status()[b])
            .then(data.times()[a].total_cmp(&data.times()[b]))
            .then(a.cmp(&b))
    });
    let mut assignment = vec![0; n];
    for bin in order.chunks(k) {
        let folds: Vec<usize> = if bin.len() == k {
            let mut f: Vec<usize> = (0..k).collect();
            f.shuffle(rng);
            f
        } else {
            index::sample(rng, k, bin.len()).into_vec()
        };
        for (&row, f) in bin.iter().zip(folds) {
            assignment[row] = f;
        }
    }
    Ok(FoldPlan { k, assignment })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub m: usize,
    pub eta: Option<f64>,
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.eta {
            Some(eta) => write!(f, "m={} eta={}", self.m, eta),
            None => write!(f, "m={}", self.m),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub components: Vec<usize>,
    /// Thresholding fractions; only for the sparse methods.
    pub etas: Vec<f64>,
}

impl HyperGrid {
    /// `m = 0..=6`, with the default eta grid for sparse methods.
    pub fn default_for(method: Method) -> Self {
        Self {
            components: (0..=DEFAULT_MAX_COMPONENTS).collect(),
            etas: if method.is_sparse() { default_eta_grid() } else { Vec::new() },
        }
    }

    /// Points ordered by `m`, then `eta`; `m = 0` appears once.
    pub fn points(&self, method: Method) -> Result<Vec<GridPoint>> {
        if self.components.is_empty() {
            return Err(Error::InvalidInput("empty component grid".into()));
        }
        if !self.components.contains(&0) {
            return Err(Error::InvalidInput("component grid must include the null model m = 0".into()));
        }
        if method.is_sparse() && self.etas.is_empty() {
            return Err(Error::InvalidInput(format!("{method} needs an eta grid")));
        }
        if !method.is_sparse() && !self.etas.is_empty() {
            return Err(Error::InvalidInput(format!("{method} is not tuned over eta")));
        }
        if let Some(e) = self.etas.iter().find(|e| !(0.0..1.0).contains(*e)) {
            return Err(Error::InvalidInput(format!("eta {e} outside [0, 1)")));
        }
        let mut ms = self.components.clone();
        ms.sort_unstable();
        ms.dedup();
        let mut etas = self.etas.clone();
        etas.sort_by(f64::total_cmp);
        etas.dedup();
        let mut out = Vec::new();
        for m in ms {
            if m == 0 || etas.is_empty() {
                out.push(GridPoint { m, eta: None });
            } else {
                out.extend(etas.iter().map(|&e| GridPoint { m, eta: Some(e) }));
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub method: Method,
    pub criterion: Criterion,
    pub direction: Direction,
    pub grid: Vec<GridPoint>,
    /// `values[g][f]`: grid point `g` scored on held-out fold `f`; NaN when
    /// the criterion is undefined on that fold.
    pub values: Vec<Vec<f64>>,
    /// Fit on the training folds was degenerate (scored worst).
    pub degenerate: Vec<Vec<bool>>,
    /// A convention applied while scoring (eventless fold, tied predictor,
    /// floored weights).
    pub flagged: Vec<Vec<bool>>,
    /// Mean over folds with a defined value.
    pub summary: Vec<f64>,
}

impl CvResult {
    pub fn selected(&self) -> Result<GridPoint> {
        select_hyperparameters(self)
    }
}

/// Best summary in the criterion's direction; ties go to the earlier grid
/// point (smaller `m`, then smaller `eta`).
pub fn select_hyperparameters(cv: &CvResult) -> Result<GridPoint> {
    let mut best: Option<usize> = None;
    for (g, &v) in cv.summary.iter().enumerate() {
        if !v.is_finite() {
            continue;
        }
        if best.is_none_or(|b| cv.direction.better(v, cv.summary[b])) {
            best = Some(g);
        }
    }
    best.map(|g| cv.grid[g])
        .ok_or_else(|| Error::Undefined("every grid point is degenerate".into()))
}

/// Fit used for one grid point: the null model or a component model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Candidate {
    /// `lp ≡ 0` with the Nelson-Aalen cumulative hazard.
    Null { baseline: StepFunction, n_features: usize },
    Model(Box<FittedSurvivalModel>),
}

impl Candidate {
    pub fn null(data: &SurvivalDataset) -> Result<Self> {
        let x = Array2::zeros((data.n(), 0));
        let problem = CoxProblem::new(data.times(), data.status(), x.view())?;
        Ok(Candidate::Null { baseline: problem.breslow(&Array1::zeros(0)), n_features: data.p() })
    }

    pub fn predict_lp(&self, x: &Array2<f64>) -> Result<Array1<f64>> {
        match self {
            Candidate::Null { n_features, .. } if x.ncols() != *n_features => Err(Error::DimensionMismatch(format!(
                "model has {} covariates, input has {}",
                n_features,
                x.ncols()
            ))),
            Candidate::Null { .. } => Ok(Array1::zeros(x.nrows())),
            Candidate::Model(m) => m.predict_lp(x),
        }
    }

    pub fn baseline(&self) -> &StepFunction {
        match self {
            Candidate::Null { baseline, .. } => baseline,
            Candidate::Model(m) => &m.cox.baseline_cumhaz,
        }
    }

    pub fn n_components(&self) -> usize {
        match self {
            Candidate::Null { .. } => 0,
            Candidate::Model(m) => m.n_components(),
        }
    }

    pub fn is_degenerate(&self) -> bool {
        matches!(self, Candidate::Model(m) if m.is_degenerate())
    }
}

/// Fits the model of one grid point on `data`.
pub fn fit_candidate(data: &SurvivalDataset, method: Method, point: GridPoint) -> Result<Candidate> {
    if point.m == 0 {
        return Candidate::null(data);
    }
    let mut spec = ModelSpec::new(method, point.m);
    spec.eta = point.eta;
    let mut path = fit_path(data, &spec)?;
    let model = path.pop().ok_or_else(|| Error::InvalidInput("empty path".into()))?;
    Ok(Candidate::Model(Box::new(model)))
}

/// Candidates for every `m` in `ms` sharing one eta, via one path fit.
/// Failed fits are returned as errors in place.
fn fit_candidates(data: &SurvivalDataset, method: Method, eta: Option<f64>, ms: &[usize]) -> Vec<Result<Candidate>> {
    let max_m = ms.iter().copied().max().unwrap_or(0);
    let path = if max_m > 0 {
        let mut spec = ModelSpec::new(method, max_m);
        spec.eta = eta;
        Some(fit_path(data, &spec))
    } else {
        None
    };
    ms.iter()
        .map(|&m| match (m, &path) {
            (0, _) => Candidate::null(data),
            (_, Some(Ok(fits))) => Ok(Candidate::Model(Box::new(fits[m - 1].clone()))),
            (_, Some(Err(e))) => Err(Error::Undefined(format!("fit failed: {e}"))),
            (_, None) => unreachable!("max_m covers every m"),
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Score {
    value: f64,
    degenerate: bool,
    flagged: bool,
}

fn score_fold(
    data: &SurvivalDataset,
    folds: &FoldPlan,
    fold: usize,
    candidate: &Result<Candidate>,
    criterion: Criterion,
) -> Score {
    let worst = Score { value: criterion.direction().worst(), degenerate: true, flagged: true };
    let candidate = match candidate {
        Ok(c) if !c.is_degenerate() => c,
        _ => return worst,
    };
    let Ok(lp) = candidate.predict_lp(data.covariates()) else { return worst };
    let lp = lp.to_vec();
    let undefined = Score { value: f64::NAN, degenerate: false, flagged: true };
    let full = Outcomes::from(data);
    let scheme = match criterion {
        Criterion::Cvll => Some(CvScheme::Naive),
        Criterion::Vhcvll => Some(CvScheme::VanHouwelingen),
        _ => None,
    };
    if let Some(scheme) = scheme {
        return match fold_loglik_term(full, &folds.held_out(fold), &lp, scheme) {
            Ok((value, eventless)) => Score { value, degenerate: false, flagged: eventless },
            Err(_) => undefined,
        };
    }
    let measure = criterion.as_measure().expect("non-likelihood criterion");
    let (train_rows, test_rows) = (folds.training_rows(fold), folds.test_rows(fold));
    let pick = |rows: &[usize]| -> (Vec<f64>, Vec<bool>, Vec<f64>) {
        (
            rows.iter().map(|&i| data.times()[i]).collect(),
            rows.iter().map(|&i| data.status()[i]).collect(),
            rows.iter().map(|&i| lp[i]).collect(),
        )
    };
    let (tr_t, tr_s, tr_lp) = pick(&train_rows);
    let (te_t, te_s, te_lp) = pick(&test_rows);
    let (Ok(train), Ok(test)) = (Outcomes::new(&tr_t, &tr_s), Outcomes::new(&te_t, &te_s)) else { return undefined };
    let prediction = Prediction { train, train_lp: &tr_lp, test, test_lp: &te_lp, baseline: candidate.baseline() };
    match evaluate(measure, &prediction) {
        Ok(e) if e.value.is_finite() => Score { value: e.value, degenerate: false, flagged: e.flagged },
        _ => undefined,
    }
}

/// K-fold cross-validation of `method` over `grid`, scored by `criterion`.
pub fn cross_validate(
    data: &SurvivalDataset,
    method: Method,
    grid: &HyperGrid,
    criterion: Criterion,
    folds: &FoldPlan,
) -> Result<CvResult> {
    let mut out = cross_validate_many(data, method, grid, &[criterion], folds)?;
    Ok(out.remove(0))
}

/// Cross-validation under several criteria sharing the same fits. Work is
/// spread over (fold × eta) tasks; results do not depend on the execution
/// order.
pub fn cross_validate_many(
    data: &SurvivalDataset,
    method: Method,
    grid: &HyperGrid,
    criteria: &[Criterion],
    folds: &FoldPlan,
) -> Result<Vec<CvResult>> {
    let points = grid.points(method)?;
    if criteria.is_empty() {
        return Err(Error::InvalidInput("no criterion given".into()));
    }
    if folds.assignment.len() != data.n() {
        return Err(Error::DimensionMismatch(format!(
            "fold plan covers {} rows, data has {}",
            folds.assignment.len(),
            data.n()
        )));
    }
    let etas: Vec<Option<f64>> = if method.is_sparse() {
        let mut e: Vec<f64> = grid.etas.clone();
        e.sort_by(f64::total_cmp);
        e.dedup();
        e.into_iter().map(Some).collect()
    } else {
        vec![None]
    };
    let tasks: Vec<(usize, usize)> = (0..folds.k).flat_map(|f| (0..etas.len()).map(move |e| (f, e))).collect();
    // per task: (grid index, score per criterion) for the points it covers
    let scored: Vec<Vec<(usize, Vec<Score>)>> = tasks
        .par_iter()
        .map(|&(fold, e)| {
            let eta = etas[e];
            let covered: Vec<usize> = (0..points.len())
                .filter(|&g| points[g].eta == eta || (points[g].m == 0 && e == 0))
                .collect();
            let ms: Vec<usize> = covered.iter().map(|&g| points[g].m).collect();
            let train = data.subset(&folds.training_rows(fold));
            let candidates = fit_candidates(&train, method, eta, &ms);
            covered
                .iter()
                .zip(candidates.iter())
                .map(|(&g, c)| (g, criteria.iter().map(|&cr| score_fold(data, folds, fold, c, cr)).collect()))
                .collect()
        })
        .collect();

    Ok(criteria
        .iter()
        .enumerate()
        .map(|(ci, &criterion)| {
            let mut values = vec![vec![f64::NAN; folds.k]; points.len()];
            let mut degenerate = vec![vec![false; folds.k]; points.len()];
            let mut flagged = vec![vec![false; folds.k]; points.len()];
            for (&(fold, _), task) in tasks.iter().zip(scored.iter()) {
                for (g, s) in task {
                    values[*g][fold] = s[ci].value;
                    degenerate[*g][fold] = s[ci].degenerate;
                    flagged[*g][fold] = s[ci].flagged;
                }
            }
            let summary = values.iter().map(|row| mean_defined(row)).collect();
            CvResult {
                method,
                criterion,
                direction: criterion.direction(),
                grid: points.clone(),
                values,
                degenerate,
                flagged,
                summary,
            }
        })
        .collect())
}

fn mean_defined(row: &[f64]) -> f64 {
    let defined: Vec<f64> = row.iter().copied().filter(|v| !v.is_nan()).collect();
    if defined.is_empty() {
        f64::NAN
    } else {
        defined.iter().sum::<f64>() / defined.len() as f64
    }
}
