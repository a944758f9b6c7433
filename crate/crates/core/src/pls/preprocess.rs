use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column centering and (optionally) unit-variance scaling, computed over the
/// observed cells of each column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub means: Array1<f64>,
    pub scales: Array1<f64>,
}

impl Preprocessing {
    pub fn fit(x: &Array2<f64>, scale: bool) -> Result<Self> {
        let p = x.ncols();
        let mut means = Array1::zeros(p);
        let mut scales = Array1::ones(p);
        for (j, col) in x.axis_iter(Axis(1)).enumerate() {
            let obs: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
            if obs.len() < 2 {
                return Err(Error::ConstantColumn { column: j });
            }
            let n = obs.len() as f64;
            let m = obs.iter().sum::<f64>() / n;
            let var = obs.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
            if !(var > 1e-24 * m.abs().max(1.0).powi(2)) {
                return Err(Error::ConstantColumn { column: j });
            }
            means[j] = m;
            if scale {
                scales[j] = var.sqrt();
            }
        }
        Ok(Self { means, scales })
    }

    pub fn n_features(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch(format!(
                "expected {} columns, got {}",
                self.n_features(),
                x.ncols()
            )));
        }
        Ok((x - &self.means) / &self.scales)
    }

    pub fn invert(&self, z: &Array2<f64>) -> Array2<f64> {
        z * &self.scales + &self.means
    }
}

/// Center and scale to unit variance.
pub fn preprocess(x: &Array2<f64>) -> Result<(Array2<f64>, Preprocessing)> {
    let state = Preprocessing::fit(x, true)?;
    Ok((state.apply(x)?, state))
}
