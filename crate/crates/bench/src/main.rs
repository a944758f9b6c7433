use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use plscox::cv::{cross_validate, default_criterion, make_balanced_folds, HyperGrid, DEFAULT_FOLDS, DEFAULT_MAX_COMPONENTS};
use plscox::metrics::Criterion;
use plscox::models::{fit_model, FittedSurvivalModel, Method, ModelSpec};
use plscox::simulate::{simulate, Link, SimConfig, SimType};
use plscox_bench::{emit_report, run_study, StudyConfig, StudyResult};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "plscox", version, about = "PLS-based Cox models: simulation, fitting, cross-validation and studies")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output file or directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset (CSV plus JSON sidecar).
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "eigengene")]
        sim_type: SimType,
        #[arg(long, default_value = "linear")]
        link: Link,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        p: Option<usize>,
    },
    /// Fit one model and write it as JSON.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        method: Method,
        #[arg(long, short = 'm')]
        components: usize,
        #[arg(long)]
        eta: Option<f64>,
    },
    /// Linear predictors of a saved model on new data.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
    /// Cross-validate one method on a dataset.
    Cv {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        method: Method,
        /// Defaults to the recommended criterion of the method.
        #[arg(long)]
        criterion: Option<Criterion>,
        #[arg(long, default_value_t = DEFAULT_FOLDS)]
        folds: usize,
        #[arg(long, default_value_t = DEFAULT_MAX_COMPONENTS)]
        max_components: usize,
    },
    /// Run a simulation study and write its report.
    Study {
        #[command(flatten)]
        common: Common,
    },
    /// Rebuild the report from a results.csv.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        method: Option<Method>,
        #[arg(long)]
        sim_type: Option<SimType>,
        #[arg(long)]
        link: Option<Link>,
    },
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    if let Some(p) = e.downcast_ref::<plscox::Error>() {
        p.kind()
    } else if e.downcast_ref::<std::io::Error>().is_some() {
        "io"
    } else {
        "error"
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = serde_json::json!({ "error": "usage", "message": e.to_string().trim() });
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = serde_json::json!({ "error": error_kind(&e), "message": format!("{e:#}") });
            eprintln!("{msg}");
            ExitCode::FAILURE
        }
    }
}

fn required_out(common: &Common) -> Result<&Path> {
    common.out.as_deref().context("--out is required")
}

fn install_jobs(jobs: Option<usize>) -> Result<()> {
    if let Some(j) = jobs {
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, sim_type, link, n, p } => {
            let mut config = match &common.config {
                Some(path) => toml::from_str::<SimConfig>(&std::fs::read_to_string(path)?)?,
                None => SimConfig::new(sim_type, link),
            };
            config.n = n.unwrap_or(config.n);
            config.p = p.unwrap_or(config.p);
            config.seed = common.seed.unwrap_or(config.seed);
            let sim = simulate(&config)?;
            sim.save(required_out(&common)?)?;
        }
        Command::Fit { common, data, method, components, eta } => {
            install_jobs(common.jobs)?;
            let data = plscox::io::read_csv(&data)?;
            let mut spec = ModelSpec::new(method, components);
            spec.eta = eta;
            let model = fit_model(&data, &spec)?;
            std::fs::write(required_out(&common)?, serde_json::to_string(&model)?)?;
        }
        Command::Predict { common, model, data } => {
            let model: FittedSurvivalModel = serde_json::from_str(&std::fs::read_to_string(&model)?)?;
            let data = plscox::io::read_csv(&data)?;
            let lp = model.predict_lp(data.covariates())?;
            let mut w = csv::Writer::from_writer(output(&common)?);
            w.write_record(["id", "lp"])?;
            for (id, v) in data.ids().iter().zip(lp.iter()) {
                w.write_record([id.clone(), v.to_string()])?;
            }
            w.flush()?;
        }
        Command::Cv { common, data, method, criterion, folds, max_components } => {
            install_jobs(common.jobs)?;
            let data = plscox::io::read_csv(&data)?;
            let criterion = criterion.unwrap_or_else(|| default_criterion(method));
            let plan = make_balanced_folds(&data, folds, &mut ChaCha8Rng::seed_from_u64(common.seed.unwrap_or(1)))?;
            let mut grid = HyperGrid::default_for(method);
            grid.components = (0..=max_components).collect();
            let cv = cross_validate(&data, method, &grid, criterion, &plan)?;
            let selected = cv.selected().ok();
            let mut w = csv::Writer::from_writer(output(&common)?);
            let mut header = vec!["criterion".to_string(), "m".into(), "eta".into()];
            header.extend((0..plan.k).map(|f| format!("fold{}", f + 1)));
            header.extend(["mean".into(), "selected".into()]);
            w.write_record(&header)?;
            for (g, point) in cv.grid.iter().enumerate() {
                let mut row = vec![criterion.to_string(), point.m.to_string(), point.eta.map_or(String::new(), |e| e.to_string())];
                row.extend(cv.values[g].iter().map(|v| v.to_string()));
                row.push(cv.summary[g].to_string());
                row.push(u8::from(selected == Some(*point)).to_string());
                w.write_record(&row)?;
            }
            w.flush()?;
        }
        Command::Study { common } => {
            let mut config = match &common.config {
                Some(path) => StudyConfig::load(path)?,
                None => StudyConfig::default(),
            };
            if let Some(s) = common.seed {
                config.seed = s;
            }
            if common.jobs.is_some() {
                config.jobs = common.jobs;
            }
            if let Some(o) = &common.out {
                config.out.clone_from(o);
            }
            let result = run_study(&config)?;
            emit_report(&result, &config.out)?;
            let meta = serde_json::json!({ "stamp": result.stamp, "config": config });
            std::fs::write(config.out.join("study.json"), serde_json::to_string_pretty(&meta)?)?;
        }
        Command::Report { common, input, method, sim_type, link } => {
            let mut result = StudyResult::load(&input)?;
            result.records.retain(|r| {
                method.is_none_or(|m| r.method == m) && sim_type.is_none_or(|s| r.sim == s) && link.is_none_or(|l| r.link == l)
            });
            if result.records.is_empty() {
                bail!("no records match the filter");
            }
            emit_report(&result, required_out(&common)?)?;
        }
    }
    Ok(())
}

fn output(common: &Common) -> Result<Box<dyn std::io::Write>> {
    Ok(match &common.out {
        Some(path) => Box::new(std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?),
        None => Box::new(std::io::stdout()),
    })
}
