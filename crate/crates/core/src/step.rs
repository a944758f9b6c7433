use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Right-continuous step function: `value(t) = values[k]` for
/// `knots[k] <= t < knots[k + 1]`, and `left_value` below the first knot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepFunction {
    knots: Vec<f64>,
    values: Vec<f64>,
    left_value: f64,
}

impl StepFunction {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, left_value: f64) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("step function knots must be strictly increasing".into()));
        }
        Ok(Self { knots, values, left_value })
    }

    pub fn constant(value: f64) -> Self {
        Self { knots: Vec::new(), values: Vec::new(), left_value: value }
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn left_value(&self) -> f64 {
        self.left_value
    }

    pub fn eval(&self, t: f64) -> f64 {
        // number of knots <= t
        let k = self.knots.partition_point(|&x| x <= t);
        if k == 0 {
            self.left_value
        } else {
            self.values[k - 1]
        }
    }

    /// Left limit `f(t-)`.
    pub fn eval_left(&self, t: f64) -> f64 {
        let k = self.knots.partition_point(|&x| x < t);
        if k == 0 {
            self.left_value
        } else {
            self.values[k - 1]
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            knots: self.knots.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
            left_value: f(self.left_value),
        }
    }
}
