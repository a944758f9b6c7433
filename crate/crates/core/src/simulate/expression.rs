use ndarray::{s, Array2};
use rand_chacha::ChaCha8Rng;

use super::{noise_matrix, standard_normal, SimConfig, SimType};
use crate::error::{Error, Result};
use crate::linalg::symmetric_eigen;

#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    pub x: Array2<f64>,
    pub labels: Vec<Option<usize>>,
    /// Eigengene module seeds, one column per module (empty otherwise).
    pub seeds: Array2<f64>,
}

/// `r_k = 1 - k/n_I (1 - r_min)` for the `k`-th gene of a module, `k` from 1.
pub fn target_correlation(k: usize, module_size: usize, r_min: f64) -> f64 {
    1.0 - k as f64 / module_size as f64 * (1.0 - r_min)
}

/// Noise multiplier giving `seed + a ε` correlation `r` with the seed.
pub fn noise_scale(r: f64, var_seed: f64, var_noise: f64) -> f64 {
    (var_seed / var_noise * (1.0 / (r * r) - 1.0)).max(0.0).sqrt()
}

fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

pub fn gen_expression(config: &SimConfig, rng: &mut ChaCha8Rng) -> Result<Expression> {
    config.validate()?;
    let (n, p) = (config.n, config.p);
    let mut labels = vec![None; p];
    let mut seeds = Array2::zeros((n, 0));
    let x = match config.sim_type {
        SimType::Eigengene => {
            let e = config.eigengene;
            let mut x = Array2::zeros((n, p));
            seeds = Array2::zeros((n, e.modules));
            for module in 0..e.modules {
                let seed = standard_normal(rng, n);
                seeds.column_mut(module).assign(&ndarray::ArrayView1::from(&seed));
                let var_seed = sample_variance(&seed);
                for k in 1..=e.module_size {
                    let noise = standard_normal(rng, n);
                    let a = noise_scale(target_correlation(k, e.module_size, e.r_min), var_seed, sample_variance(&noise));
                    let col = module * e.module_size + k - 1;
                    labels[col] = Some(module);
                    for i in 0..n {
                        x[[i, col]] = seed[i] + a * noise[i];
                    }
                }
            }
            let start = e.modules * e.module_size;
            x.slice_mut(s![.., start..]).assign(&noise_matrix(rng, n, p - start));
            x
        }
        SimType::Cluster => {
            let mut x = noise_matrix(rng, n, p);
            let relevant = config.relevant;
            for ((i, j), v) in x.indexed_iter_mut() {
                *v += if j >= relevant {
                    3.5
                } else if i < n / 2 {
                    3.0
                } else {
                    4.0
                };
            }
            labels[..relevant].iter_mut().for_each(|l| *l = Some(0));
            x
        }
        SimType::Factorial => {
            let f = config.factorial;
            let pattern = factor_pattern(f.group_size, f.correlation)?;
            let mut x = Array2::zeros((n, p));
            for group in 0..f.groups {
                let latent = noise_matrix(rng, n, f.group_size);
                let start = group * f.group_size;
                x.slice_mut(s![.., start..start + f.group_size]).assign(&latent.dot(&pattern.t()));
                labels[start..start + f.group_size].iter_mut().for_each(|l| *l = Some(group));
            }
            let start = f.groups * f.group_size;
            x.slice_mut(s![.., start..]).assign(&noise_matrix(rng, n, p - start));
            x
        }
    };
    Ok(Expression { x, labels, seeds })
}

/// Principal-component factor pattern `F = V Λ^½` of a compound-symmetry
/// correlation matrix, so that `F Fᵀ = R`.
fn factor_pattern(size: usize, rho: f64) -> Result<Array2<f64>> {
    let r = Array2::from_shape_fn((size, size), |(i, j)| if i == j { 1.0 } else { rho });
    let (values, vectors) = symmetric_eigen(&r);
    if values.iter().any(|&v| v < -1e-10) {
        return Err(Error::InvalidInput(format!("correlation {rho} is not positive semi-definite")));
    }
    let mut f = vectors;
    for (mut col, &v) in f.columns_mut().into_iter().zip(values.iter()) {
        col *= v.max(0.0).sqrt();
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn correlation_targets() {
        assert!((target_correlation(25, 25, 0.5) - 0.5).abs() < 1e-15);
        assert!((target_correlation(0, 25, 0.5) - 1.0).abs() < 1e-15);
        assert_eq!(noise_scale(1.0, 1.3, 0.8), 0.0);
        // r = 0.5 with unit variances: a² = 3
        assert!((noise_scale(0.5, 1.0, 1.0) - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn factor_pattern_reproduces_correlation() {
        let f = factor_pattern(25, 0.7).unwrap();
        let r = f.dot(&f.t());
        for ((i, j), v) in r.indexed_iter() {
            let want = if i == j { 1.0 } else { 0.7 };
            assert!((v - want).abs() < 1e-10);
        }
    }

    #[test]
    fn shapes_and_labels() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for sim_type in SimType::ALL {
            let c = SimConfig { sim_type, n: 30, p: 150, ..SimConfig::default() };
            let e = gen_expression(&c, &mut rng).unwrap();
            assert_eq!(e.x.dim(), (30, 150));
            assert!(e.x.iter().all(|v| v.is_finite()));
            assert!(e.labels[0].is_some() && e.labels[149].is_none());
        }
    }
}
