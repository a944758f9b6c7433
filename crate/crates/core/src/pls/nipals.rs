use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use super::preprocess::Preprocessing;
use crate::error::{Error, Result};
use crate::linalg;

/// Weight vectors with a norm below this end the component sequence.
const WEIGHT_NORM_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlsOptions {
    /// Scale columns to unit variance in addition to centering.
    pub scale: bool,
}

impl Default for PlsOptions {
    fn default() -> Self {
        Self { scale: true }
    }
}

/// Univariate-response PLS fit.
///
/// Components are computed NIPALS-style as regression slopes over observed
/// cells, so `X` may contain `NaN` entries. Weight and loading columns are
/// stored over all `p` inputs (zeros outside the active set of a sparse fit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlsFit {
    pub weights: Array2<f64>,
    pub components: Array2<f64>,
    pub x_loadings: Array2<f64>,
    pub y_loadings: Array1<f64>,
    pub preprocessing: Preprocessing,
    pub y_mean: f64,
    /// Indices with nonzero weight, per component.
    pub active_sets: Vec<Vec<usize>>,
    /// Implied regression coefficients on the original input scale.
    pub coefficients: Array1<f64>,
    pub intercept: f64,
    /// Fewer components than requested because a weight vector vanished.
    pub truncated: bool,
}

/// NIPALS on preprocessed data. Kept separate so the sparse fit can reuse it
/// on column subsets without re-scaling.
pub(crate) struct NipalsCore {
    pub weights: Array2<f64>,
    pub components: Array2<f64>,
    pub loadings: Array2<f64>,
    pub y_loadings: Array1<f64>,
    pub truncated: bool,
}

impl NipalsCore {
    pub fn n_components(&self) -> usize {
        self.y_loadings.len()
    }

    /// `W (P'W)^{-1} c`, the coefficient vector on the preprocessed scale.
    pub fn coefficients(&self) -> Array1<f64> {
        let k = self.n_components();
        if k == 0 {
            return Array1::zeros(self.weights.nrows());
        }
        let ptw = self.loadings.t().dot(&self.weights);
        match linalg::solve(&ptw, &self.y_loadings) {
            Ok(v) => self.weights.dot(&v),
            Err(_) => Array1::zeros(self.weights.nrows()),
        }
    }
}

fn masked_dot(a: impl Iterator<Item = f64>, b: impl Iterator<Item = f64>) -> (f64, f64) {
    // (Σ a·b, Σ b²) over pairs where a is observed
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.zip(b) {
        if !x.is_nan() {
            num += x * y;
            den += y * y;
        }
    }
    (num, den)
}

pub(crate) fn nipals(x: &Array2<f64>, y: &Array1<f64>, m: usize) -> NipalsCore {
    let (n, p) = x.dim();
    let mut xr = x.clone();
    let mut yr = y.clone();
    let mut weights = Vec::new();
    let mut comps = Vec::new();
    let mut loads = Vec::new();
    let mut cs = Vec::new();
    let mut truncated = false;

    for _ in 0..m {
        // w_j: slope of column j on y over observed cells
        let mut w = Array1::<f64>::zeros(p);
        for j in 0..p {
            let (num, den) = masked_dot(xr.column(j).iter().copied(), yr.iter().copied());
            w[j] = if den > 0.0 { num / den } else { 0.0 };
        }
        let norm = w.dot(&w).sqrt();
        if !(norm >= WEIGHT_NORM_FLOOR) {
            truncated = true;
            break;
        }
        w /= norm;

        let t = row_slopes(&xr, &w);
        let tt = t.dot(&t);
        if !(tt > 0.0) {
            truncated = true;
            break;
        }
        let load = column_slopes(&xr, &t);
        deflate(&mut xr, &t, &load);
        let c = yr.dot(&t) / tt;
        yr.scaled_add(-c, &t);

        weights.push(w);
        comps.push(t);
        loads.push(load);
        cs.push(c);
    }

    NipalsCore {
        weights: stack(&weights, p),
        components: stack(&comps, n),
        loadings: stack(&loads, p),
        y_loadings: Array1::from(cs),
        truncated,
    }
}

/// Slope of each column on `t` over observed cells.
pub(crate) fn column_slopes(x: &Array2<f64>, t: &Array1<f64>) -> Array1<f64> {
    Array1::from_iter(x.axis_iter(Axis(1)).map(|col| {
        let (num, den) = masked_dot(col.iter().copied(), t.iter().copied());
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }))
}

/// `t_i = Σ x_ij w_j / Σ w_j²` over the observed cells of row i.
pub(crate) fn row_slopes(x: &Array2<f64>, w: &Array1<f64>) -> Array1<f64> {
    Array1::from_iter(x.axis_iter(Axis(0)).map(|row| {
        let (num, den) = masked_dot(row.iter().copied(), w.iter().copied());
        if den > 0.0 {
            num / den
        } else {
            0.0
        }
    }))
}

pub(crate) fn deflate(x: &mut Array2<f64>, t: &Array1<f64>, load: &Array1<f64>) {
    for (i, mut row) in x.axis_iter_mut(Axis(0)).enumerate() {
        for (v, l) in row.iter_mut().zip(load.iter()) {
            if !v.is_nan() {
                *v -= t[i] * l;
            }
        }
    }
}

/// Scores of preprocessed rows on a stored weight/loading sequence.
pub(crate) fn project(mut xs: Array2<f64>, weights: &Array2<f64>, loadings: &Array2<f64>) -> Array2<f64> {
    let k = weights.ncols();
    let mut out = Array2::zeros((xs.nrows(), k));
    for h in 0..k {
        let t = row_slopes(&xs, &weights.column(h).to_owned());
        deflate(&mut xs, &t, &loadings.column(h).to_owned());
        out.column_mut(h).assign(&t);
    }
    out
}

pub(crate) fn stack(cols: &[Array1<f64>], rows: usize) -> Array2<f64> {
    let mut out = Array2::zeros((rows, cols.len()));
    for (k, c) in cols.iter().enumerate() {
        out.column_mut(k).assign(c);
    }
    out
}

impl PlsFit {
    pub(crate) fn from_core(
        core: NipalsCore,
        columns: Option<&[usize]>,
        p: usize,
        preprocessing: Preprocessing,
        y_mean: f64,
        active_sets: Option<Vec<Vec<usize>>>,
    ) -> Self {
        let k = core.n_components();
        let coef_sub = core.coefficients();
        let pad = |a: &Array2<f64>| -> Array2<f64> {
            match columns {
                None => a.clone(),
                Some(cols) => {
                    let mut out = Array2::zeros((p, a.ncols()));
                    for (r, &j) in cols.iter().enumerate() {
                        out.row_mut(j).assign(&a.row(r));
                    }
                    out
                }
            }
        };
        let weights = pad(&core.weights);
        let x_loadings = pad(&core.loadings);
        let mut coef_scaled = Array1::zeros(p);
        match columns {
            None => coef_scaled.assign(&coef_sub),
            Some(cols) => {
                for (r, &j) in cols.iter().enumerate() {
                    coef_scaled[j] = coef_sub[r];
                }
            }
        }
        let coefficients = &coef_scaled / &preprocessing.scales;
        let intercept = y_mean - coefficients.dot(&preprocessing.means);
        let active_sets = active_sets.unwrap_or_else(|| {
            (0..k)
                .map(|h| (0..p).filter(|&j| weights[[j, h]] != 0.0).collect())
                .collect()
        });
        PlsFit {
            weights,
            components: core.components,
            x_loadings,
            y_loadings: core.y_loadings,
            preprocessing,
            y_mean,
            active_sets,
            coefficients,
            intercept,
            truncated: core.truncated,
        }
    }

    pub fn n_components(&self) -> usize {
        self.y_loadings.len()
    }

    /// Component scores of new rows, by successive slope regressions and
    /// deflation over observed cells.
    pub fn transform(&self, x_new: &Array2<f64>) -> Result<Array2<f64>> {
        let xs = self.preprocessing.apply(x_new)?;
        Ok(project(xs, &self.weights, &self.x_loadings))
    }

    pub fn predict(&self, x_new: &Array2<f64>) -> Result<Array1<f64>> {
        let t = self.transform(x_new)?;
        Ok(t.dot(&self.y_loadings) + self.y_mean)
    }

    pub fn fitted(&self) -> Array1<f64> {
        self.components.dot(&self.y_loadings) + self.y_mean
    }

    /// The first `k` components of this fit.
    pub fn truncate(&self, k: usize) -> PlsFit {
        let k = k.min(self.n_components());
        let core = NipalsCore {
            weights: self.weights.slice(ndarray::s![.., ..k]).to_owned(),
            components: self.components.slice(ndarray::s![.., ..k]).to_owned(),
            loadings: self.x_loadings.slice(ndarray::s![.., ..k]).to_owned(),
            y_loadings: self.y_loadings.slice(ndarray::s![..k]).to_owned(),
            truncated: self.truncated,
        };
        let mut fit = PlsFit::from_core(
            core,
            None,
            self.weights.nrows(),
            self.preprocessing.clone(),
            self.y_mean,
            Some(self.active_sets[..k].to_vec()),
        );
        fit.truncated = self.truncated && k == self.n_components();
        fit
    }
}

pub(crate) fn validate_response(x: &Array2<f64>, y: &Array1<f64>, m: usize) -> Result<f64> {
    if m < 1 {
        return Err(Error::InvalidInput("number of components must be at least 1".into()));
    }
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch(format!("X has {} rows, y has {}", x.nrows(), y.len())));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("response must be finite".into()));
    }
    let mean = y.mean().unwrap_or(0.0);
    let spread = y.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
    if !(spread > 1e-12 * mean.abs().max(1.0)) {
        return Err(Error::InvalidInput("response is constant".into()));
    }
    Ok(mean)
}

pub fn fit_pls(x: &Array2<f64>, y: &Array1<f64>, m: usize) -> Result<PlsFit> {
    fit_pls_with(x, y, m, &PlsOptions::default())
}

pub fn fit_pls_with(x: &Array2<f64>, y: &Array1<f64>, m: usize, opts: &PlsOptions) -> Result<PlsFit> {
    let y_mean = validate_response(x, y, m)?;
    let preprocessing = Preprocessing::fit(x, opts.scale)?;
    let xs = preprocessing.apply(x)?;
    let yc = y - y_mean;
    let core = nipals(&xs, &yc, m);
    Ok(PlsFit::from_core(core, None, x.ncols(), preprocessing, y_mean, None))
}
