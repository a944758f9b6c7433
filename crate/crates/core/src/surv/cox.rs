use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::linalg;
use crate::step::StepFunction;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoxOptions {
    pub max_iter: usize,
    /// Convergence needs both `|Δl| <= tol_loglik` and `‖u‖∞ <= tol_score`.
    pub tol_loglik: f64,
    pub tol_score: f64,
    pub max_halvings: usize,
    /// A fit is flagged monotone once `|β_j| · sd(x_j)` exceeds this.
    pub separation_bound: f64,
}

impl Default for CoxOptions {
    fn default() -> Self {
        Self { max_iter: 50, tol_loglik: 1e-9, tol_score: 1e-6, max_halvings: 10, separation_bound: 50.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoxFit {
    pub beta: Array1<f64>,
    pub loglik: f64,
    pub loglik_null: f64,
    pub score: Array1<f64>,
    pub information: Array2<f64>,
    /// Breslow estimate of the cumulative baseline hazard for the linear
    /// predictor `x'β` (no centering).
    pub baseline_cumhaz: StepFunction,
    pub converged: bool,
    pub iterations: usize,
    /// Set when the coefficients ran off towards infinity (separation).
    pub monotone: bool,
    pub n: usize,
    pub n_events: usize,
}

impl CoxFit {
    pub fn linear_predictor(&self, x: &Array2<f64>) -> Array1<f64> {
        if self.beta.is_empty() {
            Array1::zeros(x.nrows())
        } else {
            x.dot(&self.beta)
        }
    }

    /// Two-sided Wald p-values from the inverse observed information.
    pub fn wald_p_values(&self) -> Result<Array1<f64>> {
        use statrs::distribution::{ContinuousCDF, Normal};
        let cov = linalg::inverse(&self.information)?;
        let std_normal = Normal::standard();
        Ok(Array1::from_iter(self.beta.iter().enumerate().map(|(j, b)| {
            let var = cov[[j, j]];
            if !(var > 0.0) || !var.is_finite() {
                return 1.0;
            }
            let z = b / var.sqrt();
            2.0 * (1.0 - std_normal.cdf(z.abs()))
        })))
    }
}

/// Observations sorted by decreasing time and grouped by tied times.
#[derive(Debug, Clone)]
pub struct RiskSetOrder {
    order: Vec<usize>,
    groups: Vec<(usize, usize)>,
}

impl RiskSetOrder {
    pub fn new(times: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..times.len()).collect();
        order.sort_by(|&a, &b| times[b].total_cmp(&times[a]).then(a.cmp(&b)));
        let mut groups = Vec::new();
        let mut k = 0;
        while k < order.len() {
            let t = times[order[k]];
            let mut j = k + 1;
            while j < order.len() && times[order[j]] == t {
                j += 1;
            }
            groups.push((k, j));
            k = j;
        }
        Self { order, groups }
    }

    /// Iterate tie groups from the latest time to the earliest.
    pub fn groups(&self) -> impl Iterator<Item = &[usize]> {
        self.groups.iter().map(move |&(a, b)| &self.order[a..b])
    }
}

/// Partial-likelihood evaluation for a fixed dataset.
pub struct CoxProblem<'a> {
    times: &'a [f64],
    status: &'a [bool],
    x: ArrayView2<'a, f64>,
    order: RiskSetOrder,
}

pub struct Evaluation {
    pub loglik: f64,
    pub score: Array1<f64>,
    pub information: Array2<f64>,
}

impl<'a> CoxProblem<'a> {
    pub fn new(times: &'a [f64], status: &'a [bool], x: ArrayView2<'a, f64>) -> Result<Self> {
        if times.len() != status.len() || x.nrows() != times.len() {
            return Err(Error::DimensionMismatch("cox problem rows disagree".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("cox covariates must be complete and finite".into()));
        }
        Ok(Self { times, status, x, order: RiskSetOrder::new(times) })
    }

    pub fn n_events(&self) -> usize {
        self.status.iter().filter(|&&s| s).count()
    }

    fn eta(&self, beta: &Array1<f64>) -> Array1<f64> {
        if beta.is_empty() {
            Array1::zeros(self.times.len())
        } else {
            self.x.dot(beta)
        }
    }

    pub fn loglik(&self, beta: &Array1<f64>) -> f64 {
        partial_loglik_with(&self.order, self.status, self.eta(beta).as_slice().unwrap())
    }

    /// l(β), u(β) and I(β) under the Breslow approximation.
    pub fn evaluate(&self, beta: &Array1<f64>) -> Evaluation {
        let p = self.x.ncols();
        let eta = self.eta(beta);
        let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let shift = if shift.is_finite() { shift } else { 0.0 };

        let mut s0 = 0.0;
        let mut s1 = Array1::<f64>::zeros(p);
        let mut s2 = Array2::<f64>::zeros((p, p));
        let mut loglik = 0.0;
        let mut score = Array1::<f64>::zeros(p);
        let mut info = Array2::<f64>::zeros((p, p));

        for group in self.order.groups() {
            for &i in group {
                let w = (eta[i] - shift).exp();
                s0 += w;
                let xi = self.x.row(i);
                s1.scaled_add(w, &xi);
                for a in 0..p {
                    let wa = w * xi[a];
                    for b in 0..=a {
                        s2[[a, b]] += wa * xi[b];
                    }
                }
            }
            let d = group.iter().filter(|&&i| self.status[i]).count();
            if d == 0 {
                continue;
            }
            let log_s0 = s0.ln() + shift;
            let mean = &s1 / s0;
            for &i in group.iter().filter(|&&i| self.status[i]) {
                loglik += eta[i] - log_s0;
                score += &self.x.row(i);
            }
            let df = d as f64;
            score.scaled_add(-df, &mean);
            for a in 0..p {
                for b in 0..=a {
                    info[[a, b]] += df * (s2[[a, b]] / s0 - mean[a] * mean[b]);
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                info[[b, a]] = info[[a, b]];
            }
        }
        Evaluation { loglik, score, information: info }
    }

    /// Breslow cumulative baseline hazard at `beta`.
    pub fn breslow(&self, beta: &Array1<f64>) -> StepFunction {
        let eta = self.eta(beta);
        let mut s0 = 0.0;
        let mut jumps: Vec<(f64, f64)> = Vec::new();
        for group in self.order.groups() {
            for &i in group {
                s0 += eta[i].exp();
            }
            let d = group.iter().filter(|&&i| self.status[i]).count();
            if d > 0 {
                jumps.push((self.times[group[0]], d as f64 / s0));
            }
        }
        jumps.reverse();
        let mut cum = 0.0;
        let mut knots = Vec::with_capacity(jumps.len());
        let mut values = Vec::with_capacity(jumps.len());
        for (t, h) in jumps {
            cum += h;
            knots.push(t);
            values.push(cum);
        }
        StepFunction::new(knots, values, 0.0).expect("event times are distinct and sorted")
    }

    fn column_scales(&self) -> Array1<f64> {
        let n = self.x.nrows() as f64;
        self.x.map_axis(Axis(0), |c| {
            let m = c.sum() / n;
            (c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt()
        })
    }
}

fn partial_loglik_with(order: &RiskSetOrder, status: &[bool], eta: &[f64]) -> f64 {
    let shift = eta.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let shift = if shift.is_finite() { shift } else { 0.0 };
    let mut s0 = 0.0;
    let mut loglik = 0.0;
    for group in order.groups() {
        for &i in group {
            s0 += (eta[i] - shift).exp();
        }
        let log_s0 = s0.ln() + shift;
        for &i in group.iter().filter(|&&i| status[i]) {
            loglik += eta[i] - log_s0;
        }
    }
    loglik
}

/// Breslow log partial likelihood of a given linear predictor.
pub fn partial_loglik_lp(times: &[f64], status: &[bool], lp: &[f64]) -> f64 {
    partial_loglik_with(&RiskSetOrder::new(times), status, lp)
}

pub fn fit_cox(data: &SurvivalDataset, init: &Array1<f64>, max_iter: usize, tol: f64) -> Result<CoxFit> {
    let opts = CoxOptions { max_iter, tol_score: tol, ..CoxOptions::default() };
    fit_cox_with(data.times(), data.status(), data.covariates(), init, &opts)
}

pub fn fit_cox_with(
    times: &[f64],
    status: &[bool],
    x: &Array2<f64>,
    init: &Array1<f64>,
    opts: &CoxOptions,
) -> Result<CoxFit> {
    let problem = CoxProblem::new(times, status, x.view())?;
    let p = x.ncols();
    if init.len() != p {
        return Err(Error::DimensionMismatch(format!("init has {} entries for {} covariates", init.len(), p)));
    }
    let n_events = problem.n_events();
    if n_events == 0 {
        return Err(Error::InvalidInput("no events".into()));
    }

    let loglik_null = problem.loglik(&Array1::zeros(p));
    let mut beta = init.clone();
    let mut eval = problem.evaluate(&beta);
    if !eval.loglik.is_finite() {
        return Err(Error::InvalidInput("partial likelihood not finite at the initial point".into()));
    }
    let scales = problem.column_scales();
    let mut converged = p == 0 || max_abs(&eval.score) <= opts.tol_score;
    let mut monotone = false;
    let mut iterations = 0;

    while !converged && iterations < opts.max_iter {
        iterations += 1;
        let delta = newton_direction(&eval.information, &eval.score)?;

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let cand = &beta + &(&delta * step);
            let cand_eval = problem.evaluate(&cand);
            if cand_eval.loglik.is_finite() && cand_eval.loglik >= eval.loglik - 1e-12 * eval.loglik.abs().max(1.0) {
                accepted = Some((cand, cand_eval));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, cand_eval)) = accepted else {
            if !problem.evaluate(&(&beta + &delta)).loglik.is_finite() && max_abs(&eval.score) > opts.tol_score {
                let last = assemble(&problem, beta, eval, loglik_null, false, iterations, true, n_events);
                return Err(Error::MonotoneLikelihood { last: Box::new(last) });
            }
            // no ascent available: we are at the numerical optimum
            converged = max_abs(&eval.score) <= opts.tol_score.max(1e-4);
            break;
        };
        let dl = cand_eval.loglik - eval.loglik;
        beta = cand;
        eval = cand_eval;

        if beta.iter().zip(scales.iter()).any(|(b, s)| (b * s).abs() > opts.separation_bound) {
            monotone = true;
            break;
        }
        if dl.abs() <= opts.tol_loglik && max_abs(&eval.score) <= opts.tol_score {
            converged = true;
        }
    }

    if !monotone && looks_separated(&problem, &beta, &scales, eval.loglik) {
        monotone = true;
        converged = false;
    }

    Ok(assemble(&problem, beta, eval, loglik_null, converged, iterations, monotone, n_events))
}

/// Newton can stall numerically on a likelihood that only approaches its
/// supremum at infinity. A large standardized coefficient along which the
/// likelihood keeps rising is treated as separation.
fn looks_separated(problem: &CoxProblem<'_>, beta: &Array1<f64>, scales: &Array1<f64>, loglik: f64) -> bool {
    let largest = beta.iter().zip(scales.iter()).map(|(b, s)| (b * s).abs()).fold(0.0, f64::max);
    if largest < 5.0 {
        return false;
    }
    let doubled = problem.loglik(&(beta * 2.0));
    !doubled.is_finite() || doubled >= loglik - 1e-6
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    problem: &CoxProblem<'_>,
    beta: Array1<f64>,
    eval: Evaluation,
    loglik_null: f64,
    converged: bool,
    iterations: usize,
    monotone: bool,
    n_events: usize,
) -> CoxFit {
    let baseline_cumhaz = problem.breslow(&beta);
    CoxFit {
        beta,
        loglik: eval.loglik,
        loglik_null,
        score: eval.score,
        information: eval.information,
        baseline_cumhaz,
        converged,
        iterations,
        monotone,
        n: problem.times.len(),
        n_events,
    }
}

fn newton_direction(info: &Array2<f64>, score: &Array1<f64>) -> Result<Array1<f64>> {
    if let Ok(d) = linalg::solve_spd(info, score) {
        return Ok(d);
    }
    // rank-deficient information (e.g. a constant or duplicated column)
    let p = score.len();
    let scale = (0..p).map(|j| info[[j, j]].abs()).fold(0.0, f64::max).max(1.0);
    let ridged = info + &(Array2::<f64>::eye(p) * (1e-8 * scale));
    linalg::solve_spd(&ridged, score)
}

fn max_abs(v: &Array1<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
