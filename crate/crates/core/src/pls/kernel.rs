use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Gaussian { sigma: f64 },
}

impl KernelSpec {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidInput(format!("gaussian bandwidth must be positive, got {}", sigma)));
        }
        Ok(KernelSpec::Gaussian { sigma })
    }

    fn eval(&self, a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
        match *self {
            KernelSpec::Linear => a.dot(&b),
            KernelSpec::Gaussian { sigma } => {
                let d2: f64 = a.iter().zip(b.iter()).map(|(u, v)| (u - v) * (u - v)).sum();
                (-d2 / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

/// `K[i, j] = k(x1_i, x2_j)`.
pub fn kernel_matrix(x1: &Array2<f64>, x2: &Array2<f64>, spec: &KernelSpec) -> Result<Array2<f64>> {
    if x1.ncols() != x2.ncols() {
        return Err(Error::DimensionMismatch(format!("kernel inputs have {} and {} columns", x1.ncols(), x2.ncols())));
    }
    if x1.iter().chain(x2.iter()).any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("kernel matrix needs complete data".into()));
    }
    if let KernelSpec::Gaussian { sigma } = spec {
        KernelSpec::gaussian(*sigma)?;
    }
    let rows: Vec<Vec<f64>> = (0..x1.nrows())
        .into_par_iter()
        .map(|i| (0..x2.nrows()).map(|j| spec.eval(x1.row(i), x2.row(j))).collect())
        .collect();
    Ok(Array2::from_shape_fn((x1.nrows(), x2.nrows()), |(i, j)| rows[i][j]))
}

/// σ with σ² = median pairwise squared distance / 2.
pub fn median_heuristic_sigma(x: &Array2<f64>) -> Result<f64> {
    let n = x.nrows();
    let mut d2 = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in (i + 1)..n {
            d2.push(x.row(i).iter().zip(x.row(j).iter()).map(|(a, b)| (a - b) * (a - b)).sum::<f64>());
        }
    }
    if d2.is_empty() {
        return Err(Error::InvalidInput("need at least two rows for the bandwidth heuristic".into()));
    }
    d2.sort_by(f64::total_cmp);
    let mid = d2.len() / 2;
    let med = if d2.len() % 2 == 1 { d2[mid] } else { 0.5 * (d2[mid - 1] + d2[mid]) };
    if !(med > 0.0) {
        return Err(Error::InvalidInput("all rows identical".into()));
    }
    Ok((med / 2.0).sqrt())
}
