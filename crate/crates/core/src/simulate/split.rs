use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::data::SurvivalDataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Fell back to a plain random split.
    pub unstratified: bool,
}

/// Training/test split with `round(train_fraction · n)` training rows,
/// balanced on status and observed time.
///
/// Within each status class rows are ordered by time and test rows are
/// taken by systematic sampling from a random start; class test sizes are
/// proportional (largest remainder).
pub fn train_test_split(data: &SurvivalDataset, train_fraction: f64, rng: &mut ChaCha8Rng) -> Result<Split> {
    let n = data.n();
    if n < 10 {
        return Err(Error::InvalidInput(format!("need at least 10 observations to split, got {n}")));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidInput(format!("train fraction {train_fraction} must lie in (0, 1)")));
    }
    let n_test = n - ((train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut is_test = vec![false; n];
    let unstratified = data.n_events() < 2;
    if unstratified {
        let mut rows: Vec<usize> = (0..n).collect();
        rows.shuffle(rng);
        rows[..n_test].iter().for_each(|&i| is_test[i] = true);
    } else {
        let classes: Vec<Vec<usize>> = [true, false]
            .into_iter()
            .map(|event| {
                let mut rows: Vec<usize> = (0..n).filter(|&i| data.status()[i] == event).collect();
                rows.sort_by(|&a, &b| data.times()[a].total_cmp(&data.times()[b]).then(a.cmp(&b)));
                rows
            })
            .collect();
        let quotas = apportion(n_test, &classes.iter().map(Vec::len).collect::<Vec<_>>());
        for (rows, quota) in classes.iter().zip(quotas) {
            if quota == 0 {
                continue;
            }
            let step = rows.len() as f64 / quota as f64;
            let start = rng.random::<f64>() * step;
            for k in 0..quota {
                let pos = ((start + k as f64 * step) as usize).min(rows.len() - 1);
                is_test[rows[pos]] = true;
            }
        }
    }
    let (test, train): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| is_test[i]);
    Ok(Split { train, test, unstratified })
}

/// Largest-remainder apportionment of `total` over groups of the given sizes.
fn apportion(total: usize, sizes: &[usize]) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    let exact: Vec<f64> = sizes.iter().map(|&s| total as f64 * s as f64 / n as f64).collect();
    let mut out: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let mut left = total - out.iter().sum::<usize>();
    for &g in order.iter().cycle().take(sizes.len() * 2) {
        if left == 0 {
            break;
        }
        if out[g] < sizes[g] {
            out[g] += 1;
            left -= 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;
    use rand::SeedableRng;

    fn data(n: usize, seed: u64) -> SurvivalDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let times: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.01).collect();
        let status: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.6).collect();
        SurvivalDataset::new(times, status, Array2::zeros((n, 1))).unwrap()
    }

    #[test]
    fn sizes_seventy_thirty() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = train_test_split(&data(100, 1), 0.7, &mut rng).unwrap();
        assert_eq!((s.train.len(), s.test.len()), (70, 30));
        assert!(!s.unstratified);
        let mut all: Vec<usize> = s.train.iter().chain(s.test.iter()).copied().collect();
        all.sort();
        assert_eq!(all, (0..100).collect::<Vec<_>>());
    }

    #[test]
    fn all_events_systematic() {
        let times: Vec<f64> = (1..=20).map(f64::from).collect();
        let d = SurvivalDataset::new(times, vec![true; 20], Array2::zeros((20, 1))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = train_test_split(&d, 0.7, &mut rng).unwrap();
        assert_eq!(s.test.len(), 6);
        // one test row in each block of 20/6 consecutive times
        for w in s.test.windows(2) {
            assert!(w[1] - w[0] >= 3 && w[1] - w[0] <= 4);
        }
    }

    #[test]
    fn event_fraction_balanced() {
        for seed in 0..50 {
            let d = data(100, seed);
            let overall = d.n_events() as f64 / 100.0;
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
            let s = train_test_split(&d, 0.7, &mut rng).unwrap();
            for part in [&s.train, &s.test] {
                let f = part.iter().filter(|&&i| d.status()[i]).count() as f64 / part.len() as f64;
                assert!((f - overall).abs() <= 0.1);
            }
        }
    }

    #[test]
    fn too_few_events_falls_back() {
        let times: Vec<f64> = (1..=12).map(f64::from).collect();
        let mut status = vec![false; 12];
        status[4] = true;
        let d = SurvivalDataset::new(times, status, Array2::zeros((12, 1))).unwrap();
        let s = train_test_split(&d, 0.7, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!(s.unstratified);
        assert_eq!(s.train.len() + s.test.len(), 12);
        assert!(train_test_split(&d.subset(&[0, 1, 2]), 0.7, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn apportion_sums() {
        assert_eq!(apportion(30, &[60, 40]), vec![18, 12]);
        assert_eq!(apportion(3, &[1, 1, 1, 1]).iter().sum::<usize>(), 3);
        assert_eq!(apportion(5, &[5, 0]), vec![5, 0]);
    }
}
