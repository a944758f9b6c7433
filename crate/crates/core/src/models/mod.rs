//! Cox models on PLS-type components: PLS-Cox, autoPLS-Cox, Cox-PLS and the
//! deviance-residual family (PLSDR, sPLSDR, DKPLSDR, DKsPLSDR).

mod plscox;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};
use crate::pls::nipals::project;
use crate::pls::{
    fit_pls, fit_pls_with, fit_spls_path, kernel_matrix, median_heuristic_sigma, KernelSpec, PlsFit, PlsOptions,
    Preprocessing,
};
use crate::surv::{fit_cox_with, null_deviance_residuals, CoxFit, CoxOptions};

pub use plscox::{cox_weight_path, CoxWeightPath};

/// Significance level used by autoPLS-Cox when none is given.
pub const AUTO_SIGNIFICANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "PLS-Cox")]
    PlsCox,
    #[serde(rename = "autoPLS-Cox")]
    AutoPlsCox,
    #[serde(rename = "Cox-PLS")]
    CoxPls,
    #[serde(rename = "PLSDR")]
    Plsdr,
    #[serde(rename = "sPLSDR")]
    Splsdr,
    #[serde(rename = "DKPLSDR")]
    Dkplsdr,
    #[serde(rename = "DKsPLSDR")]
    Dksplsdr,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::PlsCox,
        Method::AutoPlsCox,
        Method::CoxPls,
        Method::Plsdr,
        Method::Splsdr,
        Method::Dkplsdr,
        Method::Dksplsdr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::PlsCox => "PLS-Cox",
            Method::AutoPlsCox => "autoPLS-Cox",
            Method::CoxPls => "Cox-PLS",
            Method::Plsdr => "PLSDR",
            Method::Splsdr => "sPLSDR",
            Method::Dkplsdr => "DKPLSDR",
            Method::Dksplsdr => "DKsPLSDR",
        }
    }

    /// Tuned over a thresholding grid as well as the component count.
    pub fn is_sparse(self) -> bool {
        matches!(self, Method::Splsdr | Method::Dksplsdr)
    }

    pub fn is_kernel(self) -> bool {
        matches!(self, Method::Dkplsdr | Method::Dksplsdr)
    }

    /// Needs a complete covariate matrix.
    pub fn needs_complete(self) -> bool {
        self.is_sparse() || self.is_kernel()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown method '{s}'")))
    }
}

/// Method plus hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub method: Method,
    /// Components requested (an upper bound for autoPLS-Cox).
    pub n_components: usize,
    /// Thresholding fraction for the sparse methods, significance level for
    /// PLS-Cox and autoPLS-Cox.
    pub eta: Option<f64>,
    /// Kernel for the DK methods; defaults to a gaussian with the median
    /// heuristic bandwidth.
    pub kernel: Option<KernelSpec>,
}

impl ModelSpec {
    pub fn new(method: Method, n_components: usize) -> Self {
        Self { method, n_components, eta: None, kernel: None }
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = Some(eta);
        self
    }

    pub fn with_kernel(mut self, kernel: KernelSpec) -> Self {
        self.kernel = Some(kernel);
        self
    }
}

/// Maps covariates to components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reduction {
    Pls {
        pls: PlsFit,
    },
    Kernel {
        pls: PlsFit,
        kernel: KernelSpec,
        input: Preprocessing,
        /// Preprocessed training rows.
        training_rows: Array2<f64>,
    },
    CoxWeights {
        path: CoxWeightPath,
    },
}

impl Reduction {
    pub fn n_components(&self) -> usize {
        match self {
            Reduction::Pls { pls } | Reduction::Kernel { pls, .. } => pls.n_components(),
            Reduction::CoxWeights { path } => path.n_components(),
        }
    }

    fn training_components(&self) -> &Array2<f64> {
        match self {
            Reduction::Pls { pls } | Reduction::Kernel { pls, .. } => &pls.components,
            Reduction::CoxWeights { path } => &path.components,
        }
    }

    pub fn transform(&self, x_new: &Array2<f64>) -> Result<Array2<f64>> {
        match self {
            Reduction::Pls { pls } => pls.transform(x_new),
            Reduction::Kernel { pls, kernel, input, training_rows } => {
                let xs = input.apply(x_new)?;
                let k = kernel_matrix(&xs, training_rows, kernel)?;
                pls.transform(&k)
            }
            Reduction::CoxWeights { path } => {
                let xs = path.preprocessing.apply(x_new)?;
                Ok(project(xs, &path.weights, &path.loadings))
            }
        }
    }

    fn truncate(&self, k: usize) -> Self {
        match self {
            Reduction::Pls { pls } => Reduction::Pls { pls: pls.truncate(k) },
            Reduction::Kernel { pls, kernel, input, training_rows } => Reduction::Kernel {
                pls: pls.truncate(k),
                kernel: *kernel,
                input: input.clone(),
                training_rows: training_rows.clone(),
            },
            Reduction::CoxWeights { path } => Reduction::CoxWeights { path: path.truncate(k) },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedSurvivalModel {
    pub spec: ModelSpec,
    pub reduction: Reduction,
    /// Cox model on the components.
    pub cox: CoxFit,
    /// Fewer components than requested.
    pub truncated: bool,
}

impl FittedSurvivalModel {
    pub fn method(&self) -> Method {
        self.spec.method
    }

    pub fn n_components(&self) -> usize {
        self.reduction.n_components()
    }

    pub fn n_features(&self) -> usize {
        match &self.reduction {
            Reduction::Pls { pls } => pls.preprocessing.n_features(),
            Reduction::Kernel { input, .. } => input.n_features(),
            Reduction::CoxWeights { path } => path.preprocessing.n_features(),
        }
    }

    /// The final Cox fit hit separation.
    pub fn is_degenerate(&self) -> bool {
        self.cox.monotone || self.cox.beta.iter().any(|b| !b.is_finite())
    }

    pub fn predict_lp(&self, x_new: &Array2<f64>) -> Result<Array1<f64>> {
        if x_new.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch(format!(
                "model has {} covariates, input has {}",
                self.n_features(),
                x_new.ncols()
            )));
        }
        if self.spec.method.needs_complete() && x_new.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidInput(format!("{} needs complete covariates", self.spec.method)));
        }
        let t = self.reduction.transform(x_new)?;
        Ok(self.cox.linear_predictor(&t))
    }

    pub fn training_lp(&self) -> Array1<f64> {
        self.cox.linear_predictor(self.reduction.training_components())
    }

    /// `exp(-Λ₀(t) e^{lp})`, rows by observation, columns by time.
    pub fn predict_survival(&self, x_new: &Array2<f64>, eval_times: &[f64]) -> Result<Array2<f64>> {
        let lp = self.predict_lp(x_new)?;
        survival_matrix(&self.cox, &lp, eval_times)
    }
}

/// Survival curves for given linear predictors under a fitted baseline.
pub fn survival_matrix(cox: &CoxFit, lp: &Array1<f64>, eval_times: &[f64]) -> Result<Array2<f64>> {
    if eval_times.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidInput("evaluation times must be sorted".into()));
    }
    let cumhaz: Vec<f64> = eval_times.iter().map(|&t| if t <= 0.0 { 0.0 } else { cox.baseline_cumhaz.eval(t) }).collect();
    Ok(Array2::from_shape_fn((lp.len(), eval_times.len()), |(i, k)| (-cumhaz[k] * lp[i].exp()).exp()))
}

fn final_cox(data: &SurvivalDataset, comps: &Array2<f64>) -> Result<CoxFit> {
    let init = Array1::zeros(comps.ncols());
    match fit_cox_with(data.times(), data.status(), comps, &init, &CoxOptions::default()) {
        Ok(fit) => Ok(fit),
        Err(Error::MonotoneLikelihood { last }) => Ok(*last),
        Err(e) => Err(e),
    }
}

fn assemble(data: &SurvivalDataset, spec: ModelSpec, reduction: Reduction) -> Result<FittedSurvivalModel> {
    let cox = final_cox(data, reduction.training_components())?;
    let truncated = reduction.n_components() < spec.n_components;
    Ok(FittedSurvivalModel { spec, reduction, cox, truncated })
}

fn check_events(data: &SurvivalDataset) -> Result<()> {
    if data.n_events() == 0 {
        return Err(Error::InvalidInput("no events".into()));
    }
    Ok(())
}

fn check_components(m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidInput("number of components must be at least 1".into()));
    }
    Ok(())
}

/// PLS-Cox; with `auto` the component count is chosen by the significance
/// rule and `m` is only a cap.
pub fn fit_plscox(data: &SurvivalDataset, m: usize, sparse_eta: Option<f64>, auto: bool) -> Result<FittedSurvivalModel> {
    check_events(data)?;
    if auto && sparse_eta.is_none() {
        return Err(Error::InvalidInput("automatic component selection needs a significance level".into()));
    }
    if !auto {
        check_components(m)?;
    }
    let path = cox_weight_path(data, m, sparse_eta)?;
    let method = if auto { Method::AutoPlsCox } else { Method::PlsCox };
    let spec = ModelSpec { method, n_components: m, eta: sparse_eta, kernel: None };
    assemble(data, spec, Reduction::CoxWeights { path })
}

/// PLS of the covariates on the raw observed times, then Cox.
pub fn fit_coxpls(data: &SurvivalDataset, m: usize) -> Result<FittedSurvivalModel> {
    check_events(data)?;
    check_components(m)?;
    let pls = fit_pls(data.covariates(), &data.times_array(), m)?;
    assemble(data, ModelSpec::new(Method::CoxPls, m), Reduction::Pls { pls })
}

/// PLS (sparse when `eta` is given, on a kernel matrix when `kernel` is
/// given) of the covariates on null-model deviance residuals, then Cox.
pub fn fit_plsdr(
    data: &SurvivalDataset,
    m: usize,
    eta: Option<f64>,
    kernel: Option<KernelSpec>,
) -> Result<FittedSurvivalModel> {
    let mut path = plsdr_path(data, m, eta, kernel)?;
    Ok(path.pop().expect("nonempty path"))
}

fn plsdr_path(data: &SurvivalDataset, m: usize, eta: Option<f64>, kernel: Option<KernelSpec>) -> Result<Vec<FittedSurvivalModel>> {
    check_events(data)?;
    check_components(m)?;
    let method = match (eta.is_some(), kernel.is_some()) {
        (false, false) => Method::Plsdr,
        (true, false) => Method::Splsdr,
        (false, true) => Method::Dkplsdr,
        (true, true) => Method::Dksplsdr,
    };
    if method.needs_complete() && data.has_missing() {
        return Err(Error::InvalidInput(format!("{method} needs complete covariates")));
    }
    let d = null_deviance_residuals(data)?;
    let spec = |k: usize| ModelSpec { method, n_components: k, eta, kernel };

    let (design, wrap): (Array2<f64>, Box<dyn Fn(PlsFit) -> Reduction>) = match kernel {
        None => (data.covariates().clone(), Box::new(|pls| Reduction::Pls { pls })),
        Some(kernel) => {
            let input = Preprocessing::fit(data.covariates(), true)?;
            let xs = input.apply(data.covariates())?;
            let k = kernel_matrix(&xs, &xs, &kernel)?;
            (k, Box::new(move |pls| Reduction::Kernel { pls, kernel, input: input.clone(), training_rows: xs.clone() }))
        }
    };
    // kernel columns are centered only
    let opts = PlsOptions { scale: kernel.is_none() };

    let fits: Vec<PlsFit> = match eta {
        Some(eta) => fit_spls_path(&design, &d, m, eta, &opts)?,
        None => {
            let full = fit_pls_with(&design, &d, m, &opts)?;
            (1..=m).map(|k| full.truncate(k)).collect()
        }
    };
    fits.into_iter().enumerate().map(|(i, pls)| assemble(data, spec(i + 1), wrap(pls))).collect()
}

/// Resolves defaults: a gaussian kernel with the median heuristic bandwidth of
/// the standardized covariates for DK methods, and the autoPLS-Cox level.
pub fn resolve_spec(data: &SurvivalDataset, spec: &ModelSpec) -> Result<ModelSpec> {
    let mut out = *spec;
    if spec.method.is_kernel() && spec.kernel.is_none() {
        let (xs, _) = crate::pls::preprocess(data.covariates())?;
        out.kernel = Some(KernelSpec::gaussian(median_heuristic_sigma(&xs)?)?);
    }
    if spec.method == Method::AutoPlsCox && spec.eta.is_none() {
        out.eta = Some(AUTO_SIGNIFICANCE);
    }
    if spec.method.is_sparse() && spec.eta.is_none() {
        return Err(Error::InvalidInput(format!("{} needs eta", spec.method)));
    }
    if !spec.method.is_kernel() && spec.kernel.is_some() {
        return Err(Error::InvalidInput(format!("{} takes no kernel", spec.method)));
    }
    if matches!(spec.method, Method::CoxPls | Method::Plsdr | Method::Dkplsdr) && spec.eta.is_some() {
        return Err(Error::InvalidInput(format!("{} takes no eta", spec.method)));
    }
    Ok(out)
}

pub fn fit_model(data: &SurvivalDataset, spec: &ModelSpec) -> Result<FittedSurvivalModel> {
    let mut path = fit_path(data, spec)?;
    path.pop().ok_or_else(|| Error::InvalidInput("number of components must be at least 1".into()))
}

/// Fits for every component count `1..=spec.n_components`, sharing work
/// where the construction is greedy. Entry `k-1` equals `fit_model` with `k`
/// components.
pub fn fit_path(data: &SurvivalDataset, spec: &ModelSpec) -> Result<Vec<FittedSurvivalModel>> {
    let spec = resolve_spec(data, spec)?;
    let m = spec.n_components;
    match spec.method {
        Method::PlsCox | Method::AutoPlsCox => {
            let full = fit_plscox(data, m, spec.eta, spec.method == Method::AutoPlsCox)?;
            let mut out = Vec::with_capacity(m);
            for k in 1..=m {
                if k == m {
                    out.push(full.clone());
                } else {
                    let reduction = full.reduction.truncate(k);
                    out.push(assemble(data, ModelSpec { n_components: k, ..spec }, reduction)?);
                }
            }
            Ok(out)
        }
        Method::CoxPls => {
            check_events(data)?;
            check_components(m)?;
            let full = fit_pls(data.covariates(), &data.times_array(), m)?;
            (1..=m)
                .map(|k| assemble(data, ModelSpec { n_components: k, ..spec }, Reduction::Pls { pls: full.truncate(k) }))
                .collect()
        }
        _ => plsdr_path(data, m, spec.eta, spec.kernel),
    }
}
