//! Small dense helpers. Systems here are at most a few dozen unknowns.

use nalgebra::{DMatrix, DVector};
use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

pub fn to_na(a: &Array2<f64>) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub fn from_na(m: &DMatrix<f64>) -> Array2<f64> {
    Array2::from_shape_fn((m.nrows(), m.ncols()), |(i, j)| m[(i, j)])
}

/// Solve `a x = b` for symmetric positive definite `a`, falling back to LU.
pub fn solve_spd(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let n = b.len();
    if n == 0 {
        return Ok(Array1::zeros(0));
    }
    let am = to_na(a);
    let bv = DVector::from_iterator(n, b.iter().copied());
    let x = match am.clone().cholesky() {
        Some(ch) => ch.solve(&bv),
        None => am.lu().solve(&bv).ok_or(Error::Singular)?,
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(Array1::from_iter(x.iter().copied()))
}

/// General square solve.
pub fn solve(a: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let n = b.len();
    if n == 0 {
        return Ok(Array1::zeros(0));
    }
    let x = to_na(a)
        .lu()
        .solve(&DVector::from_iterator(n, b.iter().copied()))
        .ok_or(Error::Singular)?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(Array1::from_iter(x.iter().copied()))
}

pub fn inverse(a: &Array2<f64>) -> Result<Array2<f64>> {
    if a.nrows() == 0 {
        return Ok(Array2::zeros((0, 0)));
    }
    let inv = to_na(a).try_inverse().ok_or(Error::Singular)?;
    Ok(from_na(&inv))
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues in decreasing order.
pub fn symmetric_eigen(a: &Array2<f64>) -> (Array1<f64>, Array2<f64>) {
    let eig = to_na(a).symmetric_eigen();
    let mut order: Vec<usize> = (0..a.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = Array1::from_iter(order.iter().map(|&k| eig.eigenvalues[k]));
    let vectors = Array2::from_shape_fn((a.nrows(), a.nrows()), |(i, c)| eig.eigenvectors[(i, order[c])]);
    (values, vectors)
}
