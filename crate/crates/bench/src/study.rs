use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use plscox::cv::{cross_validate_many, fit_candidate, make_balanced_folds, Candidate, FoldPlan, GridPoint, HyperGrid};
use plscox::metrics::{evaluate, Criterion, Measure, Outcomes, Prediction};
use plscox::models::Method;
use plscox::simulate::{replicate_rng, simulate_with, train_test_split, Link, SimType};
use plscox::SurvivalDataset;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::StudyConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// A convention was applied (tied predictor, floored weights, ...).
    Flagged,
    Failed,
}

/// One (replicate, scheme, link, method, criterion, measure) outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub replicate: usize,
    pub sim: SimType,
    pub link: Link,
    pub method: Method,
    pub criterion: Criterion,
    pub measure: Measure,
    pub m: Option<usize>,
    pub eta: Option<f64>,
    pub value: f64,
    pub status: Status,
    pub note: String,
}

impl Record {
    fn key(&self) -> (&'static str, &'static str, usize, &'static str, &'static str, &'static str) {
        (self.sim.name(), self.link.name(), self.replicate, self.method.name(), self.criterion.name(), self.measure.name())
    }

    /// Bit-level equality (NaN equals NaN).
    pub fn same_as(&self, other: &Record) -> bool {
        self.key() == other.key()
            && self.m == other.m
            && self.eta.map(f64::to_bits) == other.eta.map(f64::to_bits)
            && self.value.to_bits() == other.value.to_bits()
            && self.status == other.status
            && self.note == other.note
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stamp {
    pub seed: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyResult {
    pub records: Vec<Record>,
    pub stamp: Option<Stamp>,
}

const HEADER: [&str; 11] = ["replicate", "sim", "link", "method", "criterion", "measure", "m", "eta", "value", "status", "note"];

impl StudyResult {
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| a.key().cmp(&b.key()));
    }

    pub fn write_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(w);
        w.write_record(HEADER)?;
        for r in &self.records {
            w.write_record([
                r.replicate.to_string(),
                r.sim.to_string(),
                r.link.to_string(),
                r.method.to_string(),
                r.criterion.to_string(),
                r.measure.to_string(),
                r.m.map_or(String::new(), |m| m.to_string()),
                r.eta.map_or(String::new(), |e| e.to_string()),
                r.value.to_string(),
                match r.status {
                    Status::Ok => "ok",
                    Status::Flagged => "flagged",
                    Status::Failed => "failed",
                }
                .to_string(),
                r.note.clone(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(r);
        let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
        if header != HEADER {
            return Err(anyhow!("unexpected results header {header:?}"));
        }
        let mut records = Vec::new();
        for (line, row) in reader.records().enumerate() {
            let row = row?;
            let ctx = || format!("results row {}", line + 1);
            let opt = |s: &str| if s.is_empty() { None } else { Some(s.to_string()) };
            records.push(Record {
                replicate: row[0].parse().with_context(ctx)?,
                sim: row[1].parse().with_context(ctx)?,
                link: row[2].parse().with_context(ctx)?,
                method: row[3].parse().with_context(ctx)?,
                criterion: row[4].parse().with_context(ctx)?,
                measure: row[5].parse().with_context(ctx)?,
                m: opt(&row[6]).map(|s| s.parse()).transpose().with_context(ctx)?,
                eta: opt(&row[7]).map(|s| s.parse()).transpose().with_context(ctx)?,
                value: row[8].parse().with_context(ctx)?,
                status: match &row[9] {
                    "ok" => Status::Ok,
                    "flagged" => Status::Flagged,
                    "failed" => Status::Failed,
                    other => return Err(anyhow!("{}: unknown status '{other}'", ctx())),
                },
                note: row[10].to_string(),
            });
        }
        Ok(Self { records, stamp: None })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let mut result = Self::read_csv(file)?;
        let stamp_path = path.with_file_name("study.json");
        if let Ok(text) = std::fs::read_to_string(stamp_path) {
            #[derive(Deserialize)]
            struct Meta {
                stamp: Stamp,
            }
            result.stamp = serde_json::from_str::<Meta>(&text).ok().map(|m| m.stamp);
        }
        Ok(result)
    }

    /// Selected component count per (replicate, scheme, link, method, criterion).
    pub fn selections(&self) -> BTreeMap<(SimType, Link, Method, Criterion, usize), Option<usize>> {
        self.records.iter().map(|r| ((r.sim, r.link, r.method, r.criterion, r.replicate), r.m)).collect()
    }
}

/// Stream of one (scheme, link, replicate) dataset, independent of which
/// other schemes and links the study contains.
fn stream_id(sim: SimType, link: Link, replicate: usize) -> u64 {
    let s = SimType::ALL.iter().position(|&x| x == sim).expect("listed") as u64;
    let l = Link::ALL.iter().position(|&x| x == link).expect("listed") as u64;
    (s << 40) | (l << 32) | replicate as u64
}

struct Replicate {
    sim: SimType,
    link: Link,
    index: usize,
    train: SurvivalDataset,
    test: SurvivalDataset,
    folds: FoldPlan,
}

fn prepare(config: &StudyConfig, sim: SimType, link: Link, index: usize) -> Result<Replicate> {
    let mut rng = replicate_rng(config.seed, stream_id(sim, link, index));
    let data = simulate_with(&config.sim_config(sim, link, config.seed), &mut rng)?.data;
    let split = train_test_split(&data, config.train_fraction, &mut rng)?;
    let train = data.subset(&split.train);
    let folds = make_balanced_folds(&train, config.folds, &mut rng)?;
    Ok(Replicate { sim, link, index, test: data.subset(&split.test), train, folds })
}

fn failed(rep: (SimType, Link, usize), method: Method, criterion: Criterion, measures: &[Measure], note: &str) -> Vec<Record> {
    measures
        .iter()
        .map(|&measure| Record {
            replicate: rep.2,
            sim: rep.0,
            link: rep.1,
            method,
            criterion,
            measure,
            m: None,
            eta: None,
            value: f64::NAN,
            status: Status::Failed,
            note: note.to_string(),
        })
        .collect()
}

fn score(candidate: &Candidate, train: &SurvivalDataset, test: &SurvivalDataset, measure: Measure) -> Result<(f64, bool)> {
    let train_lp = candidate.predict_lp(train.covariates())?.to_vec();
    let test_lp = candidate.predict_lp(test.covariates())?.to_vec();
    let prediction = Prediction {
        train: Outcomes::from(train),
        train_lp: &train_lp,
        test: Outcomes::from(test),
        test_lp: &test_lp,
        baseline: candidate.baseline(),
    };
    let e = evaluate(measure, &prediction)?;
    Ok((e.value, e.flagged))
}

fn run_cell(config: &StudyConfig, rep: &Replicate, method: Method) -> Vec<Record> {
    let key = (rep.sim, rep.link, rep.index);
    let grid = HyperGrid {
        components: (0..=config.max_components).collect(),
        etas: if method.is_sparse() { config.etas.clone() } else { Vec::new() },
    };
    let cvs = match cross_validate_many(&rep.train, method, &grid, &config.criteria, &rep.folds) {
        Ok(c) => c,
        Err(e) => {
            let note = format!("cross-validation: {e}");
            return config.criteria.iter().flat_map(|&c| failed(key, method, c, &config.measures, &note)).collect();
        }
    };
    let mut refits: Vec<(GridPoint, std::result::Result<Candidate, String>)> = Vec::new();
    let mut out = Vec::new();
    for cv in &cvs {
        let point = match cv.selected() {
            Ok(p) => p,
            Err(e) => {
                out.extend(failed(key, method, cv.criterion, &config.measures, &format!("selection: {e}")));
                continue;
            }
        };
        let idx = match refits.iter().position(|(p, _)| p.m == point.m && p.eta.map(f64::to_bits) == point.eta.map(f64::to_bits)) {
            Some(i) => i,
            None => {
                refits.push((point, fit_candidate(&rep.train, method, point).map_err(|e| e.to_string())));
                refits.len() - 1
            }
        };
        let candidate = match &refits[idx].1 {
            Ok(c) => c,
            Err(e) => {
                out.extend(failed(key, method, cv.criterion, &config.measures, &format!("refit: {e}")));
                continue;
            }
        };
        for &measure in &config.measures {
            let (value, status, note) = match score(candidate, &rep.train, &rep.test, measure) {
                Ok((v, false)) => (v, Status::Ok, String::new()),
                Ok((v, true)) => (v, Status::Flagged, String::new()),
                Err(e) => (f64::NAN, Status::Failed, e.to_string()),
            };
            out.push(Record {
                replicate: rep.index,
                sim: rep.sim,
                link: rep.link,
                method,
                criterion: cv.criterion,
                measure,
                m: Some(point.m),
                eta: point.eta,
                value,
                status,
                note,
            });
        }
    }
    out
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

/// Runs the full design. Failing cells become `failed` records; the result
/// is sorted and identical for any worker count.
pub fn run_study(config: &StudyConfig) -> Result<StudyResult> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.jobs.unwrap_or(0)).build()?;
    let designs: Vec<(SimType, Link, usize)> = config
        .sim_types
        .iter()
        .flat_map(|&s| config.links.iter().flat_map(move |&l| (0..config.replicates).map(move |r| (s, l, r))))
        .collect();
    let records = pool.install(|| {
        let prepared: Vec<std::result::Result<Replicate, String>> = designs
            .par_iter()
            .map(|&(s, l, r)| match catch_unwind(|| prepare(config, s, l, r)) {
                Ok(Ok(rep)) => Ok(rep),
                Ok(Err(e)) => Err(format!("simulation: {e}")),
                Err(p) => Err(format!("simulation panicked: {}", panic_message(p))),
            })
            .collect();
        let cells: Vec<(usize, Method)> =
            (0..designs.len()).flat_map(|d| config.methods.iter().map(move |&m| (d, m))).collect();
        cells
            .par_iter()
            .flat_map_iter(|&(d, method)| match &prepared[d] {
                Ok(rep) => catch_unwind(AssertUnwindSafe(|| run_cell(config, rep, method))).unwrap_or_else(|p| {
                    let note = format!("panicked: {}", panic_message(p));
                    config.criteria.iter().flat_map(|&c| failed(designs[d], method, c, &config.measures, &note)).collect()
                }),
                Err(note) => config.criteria.iter().flat_map(|&c| failed(designs[d], method, c, &config.measures, note)).collect(),
            })
            .collect::<Vec<Record>>()
    });
    let mut result = StudyResult {
        records,
        stamp: Some(Stamp { seed: config.seed, version: env!("CARGO_PKG_VERSION").to_string() }),
    };
    result.sort();
    Ok(result)
}
