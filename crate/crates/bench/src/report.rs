use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use plscox::metrics::{Criterion, Measure};
use plscox::models::Method;
use plscox::simulate::{Link, SimType};
use serde::Serialize;

use crate::plot::{boxplot, median};
use crate::study::{Record, Status, StudyResult};

/// Baselines for paired deltas.
pub const BASELINES: [Criterion; 2] = [Criterion::Cvll, Criterion::Vhcvll];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub sim: SimType,
    pub link: Link,
    pub method: Method,
    pub criterion: Criterion,
    pub measure: Measure,
    pub n: usize,
    pub failed: usize,
    pub mean: f64,
    pub median: f64,
    pub mean_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaRow {
    pub baseline: Criterion,
    pub sim: SimType,
    pub link: Link,
    pub replicate: usize,
    pub method: Method,
    pub criterion: Criterion,
    pub measure: Measure,
    pub value: f64,
    pub baseline_value: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountRow {
    pub sim: SimType,
    pub link: Link,
    pub method: Method,
    pub criterion: Criterion,
    pub m: usize,
    pub count: usize,
}

fn mean(v: &[f64]) -> f64 {
    let d: Vec<f64> = v.iter().copied().filter(|x| !x.is_nan()).collect();
    if d.is_empty() {
        f64::NAN
    } else {
        d.iter().sum::<f64>() / d.len() as f64
    }
}

pub fn summarize(records: &[Record]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(SimType, Link, Method, Criterion, Measure), Vec<&Record>> = BTreeMap::new();
    for r in records {
        groups.entry((r.sim, r.link, r.method, r.criterion, r.measure)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((sim, link, method, criterion, measure), rs)| {
            let values: Vec<f64> = rs.iter().map(|r| r.value).collect();
            let ms: Vec<f64> = rs.iter().filter_map(|r| r.m).map(|m| m as f64).collect();
            SummaryRow {
                sim,
                link,
                method,
                criterion,
                measure,
                n: values.iter().filter(|v| !v.is_nan()).count(),
                failed: rs.iter().filter(|r| r.status == Status::Failed).count(),
                mean: mean(&values),
                median: median(&values),
                mean_m: mean(&ms),
            }
        })
        .collect()
}

/// `value(criterion) - value(baseline)` for each record paired with the
/// baseline record of the same replicate, scheme, link, method and measure.
pub fn paired_deltas(records: &[Record], baseline: Criterion) -> Vec<DeltaRow> {
    let base: BTreeMap<_, f64> = records
        .iter()
        .filter(|r| r.criterion == baseline)
        .map(|r| ((r.sim, r.link, r.replicate, r.method, r.measure), r.value))
        .collect();
    records
        .iter()
        .filter(|r| r.criterion != baseline)
        .filter_map(|r| {
            let b = *base.get(&(r.sim, r.link, r.replicate, r.method, r.measure))?;
            Some(DeltaRow {
                baseline,
                sim: r.sim,
                link: r.link,
                replicate: r.replicate,
                method: r.method,
                criterion: r.criterion,
                measure: r.measure,
                value: r.value,
                baseline_value: b,
                delta: r.value - b,
            })
        })
        .collect()
}

/// Distribution of the selected component count.
pub fn component_counts(result: &StudyResult) -> Vec<CountRow> {
    let mut counts: BTreeMap<(SimType, Link, Method, Criterion, usize), usize> = BTreeMap::new();
    for ((sim, link, method, criterion, _), m) in result.selections() {
        if let Some(m) = m {
            *counts.entry((sim, link, method, criterion, m)).or_default() += 1;
        }
    }
    counts
        .into_iter()
        .map(|((sim, link, method, criterion, m), count)| CountRow { sim, link, method, criterion, m, count })
        .collect()
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(!rows.is_empty()).from_path(path)?;
    if rows.is_empty() {
        w.write_record(header)?;
    }
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes results.csv, summary.csv, deltas.csv, component_counts.csv and
/// SVG boxplots into `out`; returns the files written.
pub fn emit_report(result: &StudyResult, out: &Path) -> Result<Vec<PathBuf>> {
    if result.records.is_empty() {
        bail!("no records to report");
    }
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let mut written = Vec::new();
    let path = out.join("results.csv");
    result.write_csv(std::fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?)?;
    written.push(path);

    let path = out.join("summary.csv");
    write_rows(
        &path,
        &summarize(&result.records),
        &["sim", "link", "method", "criterion", "measure", "n", "failed", "mean", "median", "mean_m"],
    )?;
    written.push(path);

    let deltas: Vec<DeltaRow> = BASELINES.iter().flat_map(|&b| paired_deltas(&result.records, b)).collect();
    let path = out.join("deltas.csv");
    write_rows(
        &path,
        &deltas,
        &["baseline", "sim", "link", "replicate", "method", "criterion", "measure", "value", "baseline_value", "delta"],
    )?;
    written.push(path);

    let path = out.join("component_counts.csv");
    write_rows(&path, &component_counts(result), &["sim", "link", "method", "criterion", "m", "count"])?;
    written.push(path);

    let selections = result.selections();
    let methods: Vec<Method> = {
        let mut m: Vec<Method> = result.records.iter().map(|r| r.method).collect();
        m.sort();
        m.dedup();
        m
    };
    for method in methods {
        let mut by_criterion: BTreeMap<Criterion, Vec<f64>> = BTreeMap::new();
        for ((_, _, mth, criterion, _), m) in &selections {
            if *mth == method {
                by_criterion.entry(*criterion).or_default().extend(m.map(|m| m as f64));
            }
        }
        let groups: Vec<(String, Vec<f64>)> = by_criterion.into_iter().map(|(c, v)| (c.to_string(), v)).collect();
        let path = out.join(format!("selected_m_{method}.svg"));
        std::fs::write(&path, boxplot(&format!("{method}: selected components"), "components", &groups))?;
        written.push(path);
    }
    for baseline in BASELINES {
        let mut by_criterion: BTreeMap<Criterion, BTreeMap<Measure, Vec<f64>>> = BTreeMap::new();
        for d in deltas.iter().filter(|d| d.baseline == baseline) {
            by_criterion.entry(d.criterion).or_default().entry(d.measure).or_default().push(d.delta);
        }
        for (criterion, measures) in by_criterion {
            let groups: Vec<(String, Vec<f64>)> = measures.into_iter().map(|(m, v)| (m.to_string(), v)).collect();
            let path = out.join(format!("deltas_{criterion}_vs_{baseline}.svg"));
            std::fs::write(&path, boxplot(&format!("{criterion} minus {baseline}"), "delta", &groups))?;
            written.push(path);
        }
    }
    Ok(written)
}
