//! Acceptance suite: one PASS/FAIL line per criterion.

use std::time::Instant;

use ndarray::{Array1, Array2};
use plscox::metrics::{
    concordance, error_grid, iauc, prediction_error_curve, AucEstimator, AucInput, ConcordanceKind, Criterion, CurveKind,
    Measure, Outcomes,
};
use plscox::models::{fit_model, Method, ModelSpec};
use plscox::pls::{fit_pls, KernelSpec};
use plscox::simulate::{gen_expression, replicate_rng, simulate_with, target_correlation, Link, SimConfig, SimType};
use plscox::surv::{fit_cox, CoxProblem};
use plscox::SurvivalDataset;
use plscox_bench::{run_study, StudyConfig, StudyResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Breslow log partial likelihood of one covariate, straight from the sums.
fn brute_loglik(t: &[f64], s: &[bool], x: &[f64], beta: f64) -> f64 {
    (0..t.len())
        .filter(|&i| s[i])
        .map(|i| {
            let risk: f64 = (0..t.len()).filter(|&j| t[j] >= t[i]).map(|j| (beta * x[j]).exp()).sum();
            beta * x[i] - risk.ln()
        })
        .sum()
}

/// Golden-section maximizer on [-lim, lim]; `None` when the maximum sits at
/// the boundary (no finite estimate).
fn brute_argmax(f: impl Fn(f64) -> f64, lim: f64) -> Option<f64> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (-lim, lim);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while b - a > 1e-11 {
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    let x = 0.5 * (a + b);
    (x.abs() < lim - 1.0).then_some(x)
}

fn cox_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut used = 0;
    let mut seed = 0u64;
    while used < 25 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        seed += 1;
        let n = rng.random_range(4..=8);
        let t: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(1..=6u8))).collect();
        let s: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.7).collect();
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        if !s.iter().any(|&e| e) {
            continue;
        }
        let Some(oracle) = brute_argmax(|b| brute_loglik(&t, &s, &x, b), 30.0) else { continue };
        let data = SurvivalDataset::new(t.clone(), s.clone(), Array2::from_shape_vec((n, 1), x.clone()).unwrap()).unwrap();
        let fit = fit_cox(&data, &Array1::zeros(1), 50, 1e-12).map_err(|e| format!("seed {}: {e}", seed - 1))?;
        worst = worst.max((fit.beta[0] - oracle).abs());
        used += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    check(worst <= 1e-6 && secs < 1.0, format!("max |Δβ| = {worst:.2e} over 25 datasets in {secs:.3}s"))
}

fn gradient_hessian() -> Outcome {
    let mut worst: f64 = 0.0;
    for d in 0..5u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + d);
        let (n, p) = (20, 3);
        let t: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(1..=10u8))).collect();
        let s: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.7).collect();
        let x = Array2::from_shape_fn((n, p), |_| rng.random::<f64>() * 2.0 - 1.0);
        let problem = CoxProblem::new(&t, &s, x.view()).unwrap();
        for _ in 0..5 {
            let beta = Array1::from_shape_fn(p, |_| rng.random::<f64>() * 2.0 - 1.0);
            let e = problem.evaluate(&beta);
            let h = 1e-5;
            let shifted = |j: usize, delta: f64| {
                let mut b = beta.clone();
                b[j] += delta;
                b
            };
            for j in 0..p {
                let fd = (problem.loglik(&shifted(j, h)) - problem.loglik(&shifted(j, -h))) / (2.0 * h);
                worst = worst.max((fd - e.score[j]).abs() / e.score[j].abs().max(1.0));
                let up = problem.evaluate(&shifted(j, h)).score;
                let down = problem.evaluate(&shifted(j, -h)).score;
                for k in 0..p {
                    // information is the negative Hessian
                    let fd = -(up[k] - down[k]) / (2.0 * h);
                    worst = worst.max((fd - e.information[[j, k]]).abs() / e.information[[j, k]].abs().max(1.0));
                }
            }
        }
    }
    check(worst <= 1e-5, format!("max relative error {worst:.2e} (5 datasets x 5 points)"))
}

fn survival_data(n: usize, p: usize, seed: u64) -> SurvivalDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, p), |_| rng.random::<f64>() * 2.0 - 1.0);
    let t: Vec<f64> = (0..n).map(|i| -(1.0 - rng.random::<f64>()).ln() / (x[[i, 0]] - x[[i, 1]]).exp()).collect();
    let s: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.75).collect();
    SurvivalDataset::new(t, s, x).unwrap()
}

fn reduction_identities() -> Outcome {
    let mut worst_sparse: f64 = 0.0;
    let mut worst_kernel: f64 = 0.0;
    for seed in 0..5 {
        let train = survival_data(30, 10, 200 + seed);
        let test = survival_data(15, 10, 300 + seed);
        let lp = |spec: ModelSpec| -> Result<(Array1<f64>, Array1<f64>), String> {
            let m = fit_model(&train, &spec).map_err(|e| e.to_string())?;
            Ok((m.training_lp(), m.predict_lp(test.covariates()).map_err(|e| e.to_string())?))
        };
        let diff = |a: &(Array1<f64>, Array1<f64>), b: &(Array1<f64>, Array1<f64>)| {
            (&a.0 - &b.0).iter().chain((&a.1 - &b.1).iter()).fold(0.0f64, |w, v| w.max(v.abs()))
        };
        for m in [1, 2, 3] {
            let plain = lp(ModelSpec::new(Method::Plsdr, m))?;
            let sparse = lp(ModelSpec::new(Method::Splsdr, m).with_eta(0.0))?;
            worst_sparse = worst_sparse.max(diff(&plain, &sparse));
        }
        let plain = lp(ModelSpec::new(Method::Plsdr, 10))?;
        let kernel = lp(ModelSpec::new(Method::Dkplsdr, 10).with_kernel(KernelSpec::Linear))?;
        worst_kernel = worst_kernel.max(diff(&plain, &kernel));
    }
    check(
        worst_sparse <= 1e-6 && worst_kernel <= 1e-6,
        format!("sPLSDR(eta=0) vs PLSDR {worst_sparse:.2e}; linear DKPLSDR vs PLSDR {worst_kernel:.2e}"),
    )
}

/// Solves `a z = b` by Gaussian elimination with partial pivoting.
fn gauss(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut z = vec![0.0; n];
    for r in (0..n).rev() {
        z[r] = (b[r] - (r + 1..n).map(|c| a[r][c] * z[c]).sum::<f64>()) / a[r][r];
    }
    z
}

fn pls_equals_ols() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let (n, p) = (20, 5);
    let x = Array2::from_shape_fn((n, p), |_| rng.random::<f64>() * 4.0 - 2.0);
    let y = Array1::from_shape_fn(n, |i| x.row(i).sum() * 0.3 + rng.random::<f64>());
    let fit = fit_pls(&x, &y, p).map_err(|e| e.to_string())?;
    // normal equations with an intercept column
    let design = |i: usize, j: usize| if j == 0 { 1.0 } else { x[[i, j - 1]] };
    let xtx: Vec<Vec<f64>> = (0..=p).map(|a| (0..=p).map(|b| (0..n).map(|i| design(i, a) * design(i, b)).sum()).collect()).collect();
    let xty: Vec<f64> = (0..=p).map(|a| (0..n).map(|i| design(i, a) * y[i]).sum()).collect();
    let coef = gauss(xtx, xty);
    let fitted = fit.fitted();
    let worst = (0..n)
        .map(|i| ((0..=p).map(|j| design(i, j) * coef[j]).sum::<f64>() - fitted[i]).abs())
        .fold(0.0f64, f64::max);
    check(worst <= 1e-8, format!("max fitted-value difference {worst:.2e}"))
}

fn metric_sanity() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let t: Vec<f64> = (1..=8).map(f64::from).collect();
    let s = [true, false, true, true, false, true, true, false];
    let o = Outcomes::new(&t, &s).map_err(|e| e.to_string())?;
    let grid = error_grid(o);
    let surv = Array2::from_shape_fn((8, grid.len()), |(i, k)| (-(grid[k] * (i as f64 + 1.0) / 8.0)).exp());
    let bs = prediction_error_curve(&surv, &grid, o, CurveKind::Brier, true).map_err(|e| e.to_string())?;
    ok &= bs.times[0] == 0.0 && bs.values[0] == 0.0;
    notes.push(format!("BS(0)={}", bs.values[0]));

    let all = [true; 8];
    let o_full = Outcomes::new(&t, &all).unwrap();
    let grid = error_grid(o_full);
    let half = Array2::from_elem((8, grid.len()), 0.5);
    let ibs = prediction_error_curve(&half, &grid, o_full, CurveKind::Brier, true).map_err(|e| e.to_string())?.integrated;
    ok &= (ibs - 0.25).abs() <= 1e-10;
    notes.push(format!("IBS(1/2)={ibs}"));

    let flat = [0.3; 8];
    for e in AucEstimator::ALL {
        let r = iauc(e, AucInput { train: o, train_lp: &flat, test: o, test_lp: &flat }, None).map_err(|e| e.to_string())?;
        ok &= r.integrated == 0.5;
    }
    notes.push("constant lp iAUC=0.5".into());

    let lp: Vec<f64> = t.iter().map(|v| -v).collect();
    let c = concordance(ConcordanceKind::Harrell, &lp, o, None).map_err(|e| e.to_string())?.value;
    ok &= c == 1.0;
    notes.push(format!("C={c}"));

    let two = [1.0, 2.0];
    let ev = [true, true];
    let gh = concordance(ConcordanceKind::GonenHeller, &[0.0, -3.0], Outcomes::new(&two, &ev).unwrap(), None)
        .map_err(|e| e.to_string())?
        .value;
    let want = 1.0 / (1.0 + (-3.0f64).exp());
    ok &= (gh - want).abs() <= 1e-12;
    notes.push(format!("GHCI err {:.1e}", (gh - want).abs()));
    check(ok, notes.join(", "))
}

/// Cumulative/dynamic AUC by exhaustive pair counting without censoring.
fn pair_auc(t: &[f64], lp: &[f64], at: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for i in (0..t.len()).filter(|&i| t[i] <= at) {
        for j in (0..t.len()).filter(|&j| t[j] > at) {
            den += 1.0;
            num += if lp[i] > lp[j] {
                1.0
            } else if lp[i] == lp[j] {
                0.5
            } else {
                0.0
            };
        }
    }
    num / den
}

fn iauc_oracle() -> Outcome {
    let mut worst = [0.0f64; 4];
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + seed);
        let lp: Vec<f64> = (0..30).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        let t: Vec<f64> = lp.iter().map(|l| -(1.0 - rng.random::<f64>()).ln() / (1.5 * l).exp()).collect();
        let s = vec![true; 30];
        let o = Outcomes::new(&t, &s).unwrap();
        for (k, e) in AucEstimator::ALL.into_iter().enumerate() {
            let r = iauc(e, AucInput { train: o, train_lp: &lp, test: o, test_lp: &lp }, None).map_err(|e| e.to_string())?;
            for (time, a) in r.times.iter().zip(r.auc.iter()) {
                worst[k] = worst[k].max((a - pair_auc(&t, &lp, *time)).abs());
            }
        }
    }
    let detail = AucEstimator::ALL
        .iter()
        .zip(worst.iter())
        .map(|(e, w)| format!("{e:?} {w:.3}"))
        .collect::<Vec<_>>()
        .join(", ");
    check(worst.iter().all(|&w| w <= 0.05), format!("max pointwise deviation over 10 datasets: {detail}"))
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

fn simulation_calibration() -> Outcome {
    let config = SimConfig { n: 5000, p: 100, link: Link::None, ..SimConfig::default() };
    let e = gen_expression(&config, &mut ChaCha8Rng::seed_from_u64(600)).map_err(|e| e.to_string())?;
    let mut eig: f64 = 0.0;
    for module in 0..4 {
        let seed = e.seeds.column(module).to_vec();
        for k in 1..=25 {
            let r = correlation(&e.x.column(module * 25 + k - 1).to_vec(), &seed);
            eig = eig.max((r - target_correlation(k, 25, 0.5)).abs());
        }
    }
    let config = SimConfig { sim_type: SimType::Factorial, ..config };
    let f = gen_expression(&config, &mut ChaCha8Rng::seed_from_u64(601)).map_err(|e| e.to_string())?;
    let (mut within, mut between): (f64, f64) = (0.0, 0.0);
    for a in 0..100 {
        for b in a + 1..100 {
            let r = correlation(&f.x.column(a).to_vec(), &f.x.column(b).to_vec());
            if a / 25 == b / 25 {
                within = within.max((r - 0.7).abs());
            } else {
                between = between.max(r.abs());
            }
        }
    }
    let mut censor = Vec::new();
    for sim_type in SimType::ALL {
        let cfg = SimConfig { sim_type, p: 200, ..SimConfig::default() };
        let mean = (0..100)
            .map(|r| simulate_with(&cfg, &mut replicate_rng(602, r)).map(|s| s.truth.realized_censoring))
            .sum::<Result<f64, _>>()
            .map_err(|e| e.to_string())?
            / 100.0;
        censor.push((sim_type, mean));
    }
    let censor_ok = censor.iter().all(|(_, m)| (m - 0.4).abs() <= 0.03);
    check(
        eig <= 0.05 && within <= 0.03 && censor_ok,
        format!(
            "eigengene max |r - r_k| {eig:.3}; factorial max |r - 0.7| {within:.3} (between-group max |r| {between:.3}); censoring {}",
            censor.iter().map(|(s, m)| format!("{s} {m:.3}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn binomial_upper_tail(n: u64, k: u64) -> f64 {
    // P(X >= k), X ~ Binomial(n, 1/2)
    let mut total = 0.0;
    for j in k..=n {
        let mut c = 1.0;
        for i in 0..j {
            c *= (n - i) as f64 / (i + 1) as f64;
        }
        total += c;
    }
    total / 2f64.powi(n as i32)
}

fn paper_study_config() -> StudyConfig {
    StudyConfig {
        replicates: 20,
        sim_types: vec![SimType::Eigengene],
        links: vec![Link::Linear],
        methods: vec![Method::Splsdr],
        criteria: vec![Criterion::Vhcvll, Criterion::IaucSurvRoc],
        measures: vec![Measure::IaucCd],
        n: 100,
        p: 200,
        ..StudyConfig::default()
    }
}

fn selection_finding(result: &StudyResult, secs: f64) -> Outcome {
    let ms = |c: Criterion| -> Vec<f64> {
        result.records.iter().filter(|r| r.criterion == c).filter_map(|r| r.m).map(|m| m as f64).collect()
    };
    let (vh, roc) = (ms(Criterion::Vhcvll), ms(Criterion::IaucSurvRoc));
    let (mv, mr) = (median(vh.clone()), median(roc.clone()));
    check(
        vh.len() == 20 && roc.len() == 20 && mv <= 1.0 && mr >= 2.0 && secs < 1200.0,
        format!("median m: vHCVLL {mv} {vh:?}, iAUCsurvROC {mr} {roc:?}; {secs:.1}s"),
    )
}

fn improvement_direction(result: &StudyResult) -> Outcome {
    let value = |c: Criterion, rep: usize| {
        result.records.iter().find(|r| r.criterion == c && r.replicate == rep && r.measure == Measure::IaucCd).map(|r| r.value)
    };
    let deltas: Vec<f64> = (0..20)
        .filter_map(|rep| Some(value(Criterion::IaucSurvRoc, rep)? - value(Criterion::Vhcvll, rep)?))
        .filter(|d| d.is_finite())
        .collect();
    let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let nonzero: Vec<f64> = deltas.iter().copied().filter(|&d| d != 0.0).collect();
    let positive = nonzero.iter().filter(|&&d| d > 0.0).count() as u64;
    let p = binomial_upper_tail(nonzero.len() as u64, positive);
    check(
        mean > 0.0 && p < 0.1,
        format!("mean delta iAUCCD {mean:.4} over {} pairs; {positive}/{} positive, sign-test p = {p:.3}", deltas.len(), nonzero.len()),
    )
}

fn determinism() -> Outcome {
    let config = StudyConfig {
        replicates: 2,
        sim_types: vec![SimType::Eigengene, SimType::Cluster],
        links: vec![Link::Linear],
        methods: vec![Method::Splsdr, Method::PlsCox],
        criteria: vec![Criterion::Vhcvll, Criterion::IaucSurvRoc, Criterion::IbsW],
        etas: vec![0.0, 0.5],
        max_components: 3,
        n: 60,
        p: 120,
        ..StudyConfig::default()
    };
    let csv = |jobs: usize| -> Result<Vec<u8>, String> {
        let result = run_study(&StudyConfig { jobs: Some(jobs), ..config.clone() }).map_err(|e| e.to_string())?;
        let mut buf = Vec::new();
        result.write_csv(&mut buf).map_err(|e| e.to_string())?;
        Ok(buf)
    };
    let (a, b) = (csv(1)?, csv(4)?);
    check(a == b, format!("results.csv {} bytes at jobs=1 and jobs=4, identical: {}", a.len(), a == b))
}

fn main() {
    let mut outcomes: Vec<(&str, Outcome)> = vec![
        ("1 Cox oracle equivalence", cox_oracle()),
        ("2 gradient/Hessian checks", gradient_hessian()),
        ("3 reduction identities", reduction_identities()),
        ("4 full-rank PLS = OLS", pls_equals_ols()),
        ("5 metric sanity suite", metric_sanity()),
        ("6 iAUC oracle", iauc_oracle()),
        ("7 simulation calibration", simulation_calibration()),
    ];
    let start = Instant::now();
    let study = run_study(&paper_study_config());
    let secs = start.elapsed().as_secs_f64();
    match study {
        Ok(result) => {
            outcomes.push(("8 component selection finding", selection_finding(&result, secs)));
            outcomes.push(("9 performance-improvement direction", improvement_direction(&result)));
        }
        Err(e) => {
            outcomes.push(("8 component selection finding", Err(format!("study failed: {e:#}"))));
            outcomes.push(("9 performance-improvement direction", Err(format!("study failed: {e:#}"))));
        }
    }
    outcomes.push(("10 determinism", determinism()));

    let mut failures = 0;
    for (name, outcome) in &outcomes {
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", outcomes.len() - failures, outcomes.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
