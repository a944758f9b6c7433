use ndarray::{Array1, Array2, Axis};

use super::nipals::{nipals, validate_response, PlsFit, PlsOptions};
use super::preprocess::Preprocessing;
use crate::error::{Error, Result};

/// Componentwise `(|z| - λ/2)₊ sign(z)`.
pub fn soft_threshold(z: &Array1<f64>, lambda: f64) -> Array1<f64> {
    let half = lambda / 2.0;
    z.mapv(|v| {
        let shrunk = v.abs() - half;
        if shrunk > 0.0 {
            shrunk.copysign(v)
        } else {
            0.0
        }
    })
}

pub fn fit_spls(x: &Array2<f64>, y: &Array1<f64>, m: usize, eta: f64) -> Result<PlsFit> {
    fit_spls_with(x, y, m, eta, &PlsOptions::default())
}

pub fn fit_spls_with(x: &Array2<f64>, y: &Array1<f64>, m: usize, eta: f64, opts: &PlsOptions) -> Result<PlsFit> {
    let mut path = fit_spls_path(x, y, m, eta, opts)?;
    Ok(path.pop().expect("path has at least one fit"))
}

/// Sparse fits for 1..=m iterations. Entry `k-1` is exactly the fit that
/// `fit_spls` returns with `k` components, since each iteration only
/// depends on the previous ones.
pub fn fit_spls_path(x: &Array2<f64>, y: &Array1<f64>, m: usize, eta: f64, opts: &PlsOptions) -> Result<Vec<PlsFit>> {
    if !(0.0..1.0).contains(&eta) {
        return Err(Error::InvalidInput(format!("eta must lie in [0, 1), got {eta}")));
    }
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("sparse PLS needs a complete matrix".into()));
    }
    let y_mean = validate_response(x, y, m)?;
    let p = x.ncols();
    let preprocessing = Preprocessing::fit(x, opts.scale)?;
    let xs = preprocessing.apply(x)?;
    let yc = y - y_mean;

    let mut residual = yc.clone();
    let mut in_model = vec![false; p];
    let mut beta = Array1::<f64>::zeros(p);
    let mut history: Vec<Vec<usize>> = Vec::with_capacity(m);
    let mut path: Vec<PlsFit> = Vec::with_capacity(m);

    for k in 1..=m {
        let mut z = xs.t().dot(&residual);
        let zmax = z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(zmax > 1e-12 * (yc.dot(&yc).sqrt() + 1.0)) {
            if k == 1 {
                return Err(Error::EmptyModel);
            }
            let mut last = path.last().expect("earlier fit").clone();
            last.truncated = true;
            path.push(last);
            continue;
        }
        let norm = z.dot(&z).sqrt();
        z /= norm;
        let lambda = 2.0 * eta * zmax / norm;
        let w = soft_threshold(&z, lambda);
        for j in 0..p {
            if w[j] != 0.0 || beta[j] != 0.0 {
                in_model[j] = true;
            }
        }
        let columns: Vec<usize> = (0..p).filter(|&j| in_model[j]).collect();
        history.push(columns.clone());

        let sub = xs.select(Axis(1), &columns);
        let core = nipals(&sub, &yc, k.min(columns.len()));
        let mut fit = PlsFit::from_core(core, Some(&columns), p, preprocessing.clone(), y_mean, Some(history.clone()));
        fit.truncated = fit.truncated || fit.n_components() < k;

        beta = &fit.coefficients * &preprocessing.scales;
        residual = &yc - &xs.dot(&beta);
        path.push(fit);
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pls::fit_pls;
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(seed: u64, n: usize, p: usize) -> (Array2<f64>, Array1<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Array2::from_shape_fn((n, p), |_| rng.random::<f64>() * 2.0 - 1.0);
        let y = Array1::from_shape_fn(n, |i| x[[i, 0]] - 2.0 * x[[i, 1]] + 0.3 * rng.random::<f64>());
        (x, y)
    }

    #[test]
    fn threshold_examples() {
        let z = array![0.9, -0.4, 0.1];
        let out = soft_threshold(&z, 0.6);
        for (a, b) in out.iter().zip([0.6, -0.1, 0.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(soft_threshold(&z, 0.0), z);
        assert!(soft_threshold(&z, 1.8).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_eta_is_plain_pls() {
        let (x, y) = random(1, 30, 8);
        for m in 1..=4 {
            let a = fit_spls(&x, &y, m, 0.0).unwrap();
            let b = fit_pls(&x, &y, m).unwrap();
            assert_eq!(a.active_sets.last().unwrap().len(), 8);
            for (u, v) in a.fitted().iter().zip(b.fitted().iter()) {
                assert!((u - v).abs() < 1e-10);
            }
            for (u, v) in a.coefficients.iter().zip(b.coefficients.iter()) {
                assert!((u - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn column_equal_to_response_is_selected_alone() {
        let (mut x, _) = random(2, 40, 6);
        let y = Array1::from_shape_fn(40, |i| (i as f64 * 0.37).sin() * 3.0 + 1.0);
        x.column_mut(3).assign(&y);
        let fit = fit_spls(&x, &y, 1, 0.99).unwrap();
        assert_eq!(fit.active_sets, vec![vec![3]]);
        assert_eq!(fit.n_components(), 1);
        for (u, v) in fit.fitted().iter().zip(y.iter()) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn active_sets_nested_and_path_consistent() {
        let (x, y) = random(3, 40, 12);
        let path = fit_spls_path(&x, &y, 4, 0.6, &PlsOptions::default()).unwrap();
        let last = &path[3];
        for w in last.active_sets.windows(2) {
            assert!(w[0].iter().all(|j| w[1].contains(j)));
        }
        for k in 1..=4 {
            let direct = fit_spls(&x, &y, k, 0.6).unwrap();
            assert_eq!(direct, path[k - 1]);
        }
        // weights vanish outside the active set
        let omega = last.active_sets.last().unwrap();
        for j in (0..12).filter(|j| !omega.contains(j)) {
            assert!(last.weights.row(j).iter().all(|&v| v == 0.0));
            assert_eq!(last.coefficients[j], 0.0);
        }
        assert!(last.transform(&x).unwrap().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn orthogonal_response_is_empty_model() {
        let x = array![[1.0, 2.0], [-1.0, 0.0], [1.0, -2.0], [-1.0, 0.0]];
        // orthogonal to both centered columns
        let y = array![3.0, 4.0, 3.0, 2.0];
        let xs = Preprocessing::fit(&x, true).unwrap().apply(&x).unwrap();
        assert!(xs.t().dot(&(&y - 3.0)).iter().all(|v| v.abs() < 1e-12));
        assert!(matches!(fit_spls(&x, &y, 1, 0.5), Err(Error::EmptyModel)));
    }

    #[test]
    fn rejects_bad_inputs() {
        let (mut x, y) = random(4, 10, 3);
        assert!(fit_spls(&x, &y, 1, 1.0).is_err());
        assert!(fit_spls(&x, &y, 1, -0.1).is_err());
        x[[0, 0]] = f64::NAN;
        assert!(fit_spls(&x, &y, 1, 0.1).is_err());
    }

    proptest! {
        #[test]
        fn threshold_is_contraction(z in proptest::collection::vec(-5.0f64..5.0, 1..20), lambda in 0.0f64..6.0) {
            let z = Array1::from(z);
            let out = soft_threshold(&z, lambda);
            let zmax = z.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            prop_assert!(out.iter().all(|v| v.abs() <= zmax));
            for (o, v) in out.iter().zip(z.iter()) {
                prop_assert!(*o == 0.0 || o.signum() == v.signum());
            }
        }
    }
}
